"""Frozen constants for the unquantified inequalities.

Produced by ``paraproduct-lab calibrate`` (seed 7, 400 instances, depth 3):
twice the largest ratio observed in the sweep.  Observed maxima were 1.0
(embedding), 1.2254 (X' vs product BMO) and 1.0 (mixed bound).  A second
sweep with seed 11 and 3000 instances stayed below these maxima.  Acceptance
runs use other seeds.
"""

# sum |lam_R||A_R| <= C_EMB * ||lam||_BMOprod * ||s_A||_1
C_EMB = 2.0
# ||lam||_X' <= C_PROD * ||lam||_BMOprod
C_PROD = 2.450816006502286
# l1(L2) x l2(L2) bound with the x-fixed mixed BMO norm
C_CAR = 2.0
