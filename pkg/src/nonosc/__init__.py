"""Certify robust non-oscillation of chemical reaction networks.

The pipeline reduces a network by its conservation laws, embeds the reduced
Jacobian into a cone of rank-one matrices, and searches for a piecewise-linear
common Lyapunov function of the second additive compound inclusion.
"""

from .certify import Certificate, CertifyOptions, Verdict, certify, emit_report
from .netmodel import Network, parse_network, read_network

__all__ = [
    "Certificate",
    "CertifyOptions",
    "Network",
    "Verdict",
    "certify",
    "emit_report",
    "parse_network",
    "read_network",
]
