"""Exact weak-coupling series for the Lieb-Liniger and Gaudin-Yang ground state
energy density, derived from the Bethe ansatz integral equations by matched
bulk/edge expansions of the resolvent, together with large-order diagnostics
and a high-precision Nystrom oracle."""

__version__ = "0.1.0"
