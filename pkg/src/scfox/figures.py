"""Curve data for the four result figures.

The captions give the shadowing levels (heavy m_s = 0.5, moderate 5,
light 50), u = 3, the 15 dB operating point of the ROC figure and the
branch set m = [3.5, 4.5, 5.5] with m_s = 50, but not which multipath
values go with which curve.  The choice made here is written into every
CSV header: each shadowing level uses m = [1.0, 1.5, 2.0] (a set with
m < 1 on no branch, so every Mellin-Barnes path stays well inside its
strip), the L-branch receiver uses the first L entries, and all branches
share the same average SNR.  The ABEP figure also carries the
m = [3.5, 4.5, 5.5], m_s = 50 comparison set.
"""

from .scenario import Scenario

SHADOWING = (("heavy", 0.5), ("moderate", 5.0), ("light", 50.0))
MULTIPATH = (1.0, 1.5, 2.0)
REFERENCE_SET = ("ref", (3.5, 4.5, 5.5), 50.0)

# Average-SNR sweeps stop where the plotted quantity falls to roughly 1e-8,
# below which a 1e6-sample simulation can no longer resolve it.
ABEP_GAMMA_BAR_DB = tuple(2.5 * k for k in range(9))     # 0 ... 20 dB
ACC_GAMMA_BAR_DB = tuple(float(x) for x in range(0, 31, 5))
AUC_GAMMA_BAR_DB = tuple(2.5 * k for k in range(11))     # 0 ... 25 dB
ROC_GAMMA_BAR_DB = 15.0
ROC_PF = tuple(10.0 ** (-4 + k / 3.0) for k in range(13))   # 1e-4 ... 1
U = 3

ASSUMPTION = ("curve sets: m = [1.0, 1.5, 2.0] for m_s in {0.5, 5, 50}; L-branch "
              "receiver uses the first L branches; equal average SNR on all branches")


def _sets(figure):
    sets = [(name, MULTIPATH, ms) for name, ms in SHADOWING]
    if figure == 1:
        sets.append(REFERENCE_SET)
    return sets


def figure_scenarios(figure, method="fox-h", sim=None, tol=1e-10):
    """Scenarios making up one figure, in curve order."""
    if figure not in (1, 2, 3, 4):
        raise ValueError("figure must be 1, 2, 3 or 4")
    from .montecarlo import SimConfig
    sim = sim or SimConfig()
    out = []
    for name, ms_list, ms in _sets(figure):
        for L in (1, 2, 3):
            branches = tuple((m, ms, 0.0) for m in ms_list[:L])
            base = dict(name=f"fig{figure}-{name}-L{L}", branches=branches, method=method,
                        sim=sim, tol=tol, comments=(ASSUMPTION,))
            if figure == 1:
                sc = Scenario(metric="abep", sweep_variable="gamma_bar_db",
                              sweep_values=ABEP_GAMMA_BAR_DB, params={"rho": 1.0}, **base)
            elif figure == 2:
                sc = Scenario(metric="acc", sweep_variable="gamma_bar_db",
                              sweep_values=ACC_GAMMA_BAR_DB, params={"bandwidth": 1.0}, **base)
            elif figure == 3:
                base["branches"] = tuple((m, ms, ROC_GAMMA_BAR_DB) for m in ms_list[:L])
                sc = Scenario(metric="adp", sweep_variable="pf", sweep_values=ROC_PF,
                              params={"u": U}, complement=True, **base)
            else:
                sc = Scenario(metric="auc", sweep_variable="gamma_bar_db",
                              sweep_values=AUC_GAMMA_BAR_DB, params={"u": U}, complement=True,
                              **base)
            out.append(sc)
    return out


TITLES = {
    1: "ABEP for BPSK (rho = 1) versus average SNR per branch",
    2: "normalised average capacity (bandwidth = 1, bits/s/Hz) versus average SNR per branch",
    3: "complementary ROC: 1 - average detection probability versus false-alarm "
       "probability, u = 3, average SNR 15 dB",
    4: "complementary average AUC (1 - A) versus average SNR per branch, u = 3",
}
