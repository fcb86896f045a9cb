"""Monte Carlo laboratory for spectra of products of random matrices.

Estimates and cross-checks the growth rates of singular values
(Lyapunov exponents) and eigenvalue moduli (stability exponents) of
products of i.i.d. invertible random matrices, together with the
projective-space contraction diagnostics that underpin them.

Command line interface::

    lyaplab check    --config cfg.txt           # sufficient-condition report
    lyaplab spectrum --config cfg.txt --out DIR # exponent estimates
    lyaplab gaps     --config cfg.txt --out DIR # eigenvalue/singular gap decay
    lyaplab align    --config cfg.txt --out DIR # singular-direction alignment
    lyaplab clt      --config cfg.txt --out DIR # fluctuation matching
    lyaplab measure  --config cfg.txt --out DIR # invariant measure, A/B bounds

Outputs are a key=value manifest, JSON-Lines trajectory records, CSV
summary tables, and PNG figures; all byte-reproducible from the manifest.
"""

from __future__ import annotations

__version__ = "0.1.0"
