"""Frozen pilot-calibrated thresholds.

Generated by scripts/run_pilot.py; do not edit by hand.  Keys are
(ensemble label, p, r) for gaps and (ensemble label, probe, r) for
alignment.  Margins and pilot seeds are recorded in PILOT_INFO.
"""

GAP_THRESHOLDS = {
    ('iid_uniform(0,1)_d3', 1, 0.25): 0.02714058275772216,
    ('iid_uniform(0,1)_d3', 1, 0.5): 0.006068818799522546,
    ('iid_uniform(0,1)_d3', 1, 1.0): 0.0003034409399761273,
    ('iid_uniform(0,1)_d3', 2, 0.25): 0.1611297304126737,
    ('iid_uniform(0,1)_d3', 2, 0.5): 0.03602970303989537,
    ('iid_uniform(0,1)_d3', 2, 1.0): 0.0018014851519947681,
    ('iid_uniform(0,1)_d3', 3, 0.25): 0.2065957661238541,
    ('iid_uniform(0,1)_d3', 3, 0.5): 0.0461962176916586,
    ('iid_uniform(0,1)_d3', 3, 1.0): 0.00230981088458293,
    ('isotropic_gaussian_d3_sd1', 1, 0.25): 0.3591019885292249,
    ('isotropic_gaussian_d3_sd1', 1, 0.5): 0.08029764572066966,
    ('isotropic_gaussian_d3_sd1', 1, 1.0): 0.004014882286033483,
    ('isotropic_gaussian_d3_sd1', 2, 0.25): 0.25076056651232714,
    ('isotropic_gaussian_d3_sd1', 2, 0.5): 0.05607176727979209,
    ('isotropic_gaussian_d3_sd1', 2, 1.0): 0.002803588363989604,
    ('isotropic_gaussian_d3_sd1', 3, 0.25): 0.30142197136919663,
    ('isotropic_gaussian_d3_sd1', 3, 0.5): 0.0674000017893519,
    ('isotropic_gaussian_d3_sd1', 3, 1.0): 0.0033700000894675954,
}

ALIGN_THRESHOLDS = {
    ('isotropic_gaussian_d2_sd1', 'e2', 0.25): 1.0479559480496123,
    ('isotropic_gaussian_d2_sd1', 'e2', 0.5): 0.23433007372641718,
    ('isotropic_gaussian_d2_sd1', 'e2', 1.0): 0.011716503686320857,
    ('isotropic_gaussian_d2_sd1', 'random', 0.25): 1.2034945155532364,
    ('isotropic_gaussian_d2_sd1', 'random', 0.5): 0.26910955473252146,
    ('isotropic_gaussian_d2_sd1', 'random', 1.0): 0.013455477736626073,
}

PILOT_INFO = {
    'n_max': 400,
    'stride': 100,
    'trajectories': 200,
    'gap_margin': 2.0,
    'align_margin': 1.5,
    'seeds': {
        'isotropic_gaussian_d3_sd1': (777001, 777011, 777021),
        'iid_uniform(0,1)_d3': (777002, 777012, 777022),
        'isotropic_gaussian_d2_sd1': (777003, 777013, 777023),
    },
}
