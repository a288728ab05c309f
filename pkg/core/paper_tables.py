"""
Published lookup tables shipped with the package

Percentiles of Z(c, delta) at the 5% and 95% levels (T = 10000, 1,000,000
replications) and the adjusted first-stage levels of the switching test
(T = 5000, 10,000 replications). Both are tagged ``source=paper``.
"""

import numpy as np

from .tables import ALPHA1_LEVELS, ALPHA1_SCAN, Z_PERCENTILES, CriticalValueTable

_Z_DELTAS = [-1.0, -0.9, -0.6, -0.3, 0.0]

# c: (5th percentiles by delta, 95th percentiles by delta)
_Z_ROWS = {
    5: ([-0.992, -1.069, -1.278, -1.467, -1.646], [2.224, 2.171, 1.988, 1.815, 1.644]),
    0: ([0.078, -0.100, -0.644, -1.163, -1.646], [2.862, 2.778, 2.466, 2.081, 1.644]),
    -10: ([-0.927, -1.004, -1.230, -1.445, -1.646], [2.240, 2.188, 2.019, 1.836, 1.644]),
    -20: ([-1.145, -1.198, -1.355, -1.503, -1.646], [2.089, 2.047, 1.919, 1.783, 1.644]),
    -30: ([-1.242, -1.283, -1.411, -1.531, -1.646], [2.014, 1.979, 1.871, 1.759, 1.644]),
    -40: ([-1.298, -1.334, -1.443, -1.547, -1.646], [1.968, 1.936, 1.843, 1.744, 1.644]),
    -50: ([-1.336, -1.368, -1.465, -1.557, -1.646], [1.937, 1.907, 1.823, 1.733, 1.644]),
    -60: ([-1.363, -1.393, -1.481, -1.564, -1.646], [1.910, 1.884, 1.808, 1.726, 1.644]),
    -80: ([-1.402, -1.428, -1.504, -1.576, -1.646], [1.877, 1.853, 1.786, 1.715, 1.644]),
    -100: ([-1.429, -1.452, -1.519, -1.584, -1.646], [1.852, 1.831, 1.771, 1.708, 1.644]),
    -130: ([-1.456, -1.476, -1.535, -1.593, -1.646], [1.826, 1.809, 1.756, 1.700, 1.644]),
    -160: ([-1.476, -1.494, -1.546, -1.599, -1.646], [1.808, 1.791, 1.744, 1.694, 1.644]),
    -190: ([-1.490, -1.505, -1.554, -1.603, -1.646], [1.794, 1.779, 1.736, 1.690, 1.644]),
}

# delta_tau: (alpha1 left, alpha1 right)
_ALPHA1_ROWS = {
    -0.797: (0.14, 0.43),
    -0.758: (0.15, 0.50),
    -0.718: (0.17, 0.51),
    -0.678: (0.18, 0.56),
    -0.638: (0.19, 0.58),
    -0.598: (0.20, 0.62),
    -0.558: (0.21, 0.65),
    -0.518: (0.22, 0.68),
    -0.478: (0.23, 0.70),
    -0.439: (0.24, 0.73),
    -0.399: (0.26, 0.75),
    -0.359: (0.28, 0.82),
    -0.319: (0.28, 0.89),
    -0.279: (0.28, 0.92),
    -0.239: (0.30, 0.98),
    -0.199: (0.32, 0.98),
    -0.159: (0.37, 0.98),
    -0.119: (0.50, 0.98),
    -0.080: (0.61, 0.98),
    -0.040: (0.79, 0.98),
}


def paper_z_table() -> CriticalValueTable:
    c_grid = np.array(sorted(_Z_ROWS), dtype=float)
    values = np.empty((c_grid.size, len(_Z_DELTAS), 2))
    for i, c in enumerate(c_grid):
        lower, upper = _Z_ROWS[int(c)]
        values[i, :, 0] = lower
        values[i, :, 1] = upper
    return CriticalValueTable(
        kind=Z_PERCENTILES,
        c_grid=c_grid,
        delta_grid=np.array(_Z_DELTAS),
        alpha_grid=np.array([0.05, 0.95]),
        values=values,
        sim_T=10000,
        replications=1_000_000,
        seed=0,
        source="paper",
    )


def paper_alpha1_table() -> CriticalValueTable:
    delta_grid = np.array(sorted(_ALPHA1_ROWS), dtype=float)
    values = np.array([_ALPHA1_ROWS[d] for d in sorted(_ALPHA1_ROWS)], dtype=float)
    return CriticalValueTable(
        kind=ALPHA1_LEVELS,
        c_grid=np.array([-120.0, 4.0]),
        delta_grid=delta_grid,
        alpha_grid=ALPHA1_SCAN,
        values=values,
        sim_T=5000,
        replications=10_000,
        seed=0,
        source="paper",
    )
