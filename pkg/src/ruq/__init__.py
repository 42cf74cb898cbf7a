"""Conditional Renyi entropies, remaining-uncertainty bounds and exact hashing checks.

Modules:
    probability: joint sources, product sources and source files.
    measures: conditional Renyi entropies of every variant, in nats.
    bounds: asymptotic remaining-uncertainty bounds and exponents.
    gf2m, hashing: hash families and their universality certificates.
    oneshot: exact one-shot inequality checks for hashed sources.
    slepianwolf: converse checks for small Slepian-Wolf codes.
    multipath: multipath secret sharing over GF(2^m).
    cli: the ``ruq`` command line.
"""

__version__ = "0.1.0"
