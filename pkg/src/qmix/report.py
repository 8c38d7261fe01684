"""Tabular data behind each figure, as (header, rows) pairs ready for CSV."""

import numpy as np

from .circuits import AnsatzSpec
from .entanglement import cel_ghz_noisy, cel_mixed, cel_w_noisy, ghz_sep_threshold, w_sep_threshold
from .genesis import _GeneratorModel, local_rotation, derived_rng, purity_survey, train_generator
from .qcore import PureState
from . import qml

FAMILIES = {
    "ghz": (cel_ghz_noisy, ghz_sep_threshold),
    "w": (cel_w_noisy, w_sep_threshold),
}

FIG2_HEADER = ("family", "n", "phi", "p", "cel", "separable", "cel_nonpositive")
FIG4_HEADER = ("ansatz", "width", "depth", "sample", "purity")
FIG5_HEADER = ("epsilon", "index", "cel")
FIG5_SUMMARY_HEADER = ("epsilon", "count", "mean", "std", "min", "max")
FIG6_HEADER = ("n", "ansatz", "iteration", "mean_batch_accuracy")
FIG7_HEADER = ("n", "ansatz", "width", "depth", "mean_accuracy", "mean_f1")


def fig2_curves(ns=(2, 3, 4, 5), points=201):
    """CEL of the noisy GHZ and W families along ``p = cos^2(phi/2)``, phi in [0, 2 pi].

    ``separable`` marks the exact separable region; ``cel_nonpositive``
    marks where CEL cannot certify entanglement.
    """
    rows = []
    phis = np.linspace(0, 2 * np.pi, points)
    for family, (f, thr) in FAMILIES.items():
        for n in ns:
            t = thr(n)
            for phi in phis:
                p = float(np.clip(np.cos(phi / 2) ** 2, 0.0, 1.0))
                c = f(n, p)
                rows.append((family, n, float(phi), p, c, int(p <= t), int(c <= 0)))
    return FIG2_HEADER, rows


def fig2_threshold_rows(ns=(2, 3, 4, 5)):
    """CEL evaluated exactly at each family's separability threshold."""
    out = []
    for family, (f, thr) in FAMILIES.items():
        for n in ns:
            out.append((family, n, thr(n), f(n, thr(n))))
    return ("family", "n", "threshold_p", "cel_at_threshold"), out


def fig4_purity(kinds=("HWE", "SEA", "SD"), widths=(2, 3, 4, 5), depths=(1, 2, 3, 4), samples=100, seed=0):
    return FIG4_HEADER, purity_survey(kinds, widths, depths, samples, seed)


def fig5_distribution(epsilons=(0.25, 0.5, 0.75, 1.0), count=200, seed=0, n_target=3, spec=None, xi=0.25,
                      delta=0.01):
    """CEL of perturbed |0...0> inputs pushed through one trained generator.

    Returns ``(header, rows, summary_header, summary_rows)``.
    """
    if spec is None:
        spec = AnsatzSpec("SEA", n_target + 2, 4)
    rho_in = PureState.zeros(n_target).to_density()
    theta = train_generator(rho_in, spec, xi, delta, seed=seed)
    model = _GeneratorModel(rho_in, spec)
    d = 2**n_target
    rows, summary = [], []
    for ei, eps in enumerate(epsilons):
        vals = []
        for i in range(count):
            v = local_rotation(n_target, derived_rng(seed, 0xF15, ei, i), eps)
            block = model.block.copy()
            block[:d] = v @ model.block[:d]
            c = cel_mixed(model.output(theta, block=block)).value
            vals.append(c)
            rows.append((eps, i, c))
        vals = np.array(vals)
        summary.append((eps, count, vals.mean(), vals.std(ddof=1), vals.min(), vals.max()))
    return FIG5_HEADER, rows, FIG5_SUMMARY_HEADER, summary


def fig6_convergence(traj_rows):
    avg = qml.average_trajectories(traj_rows)
    return FIG6_HEADER, [(n, kind, it, a) for (n, kind, it), a in avg.items()]


def fig7_performance(final_rows):
    acc = {}
    for n, kind, w, d, _seed, a, _p, _r, f1 in final_rows:
        acc.setdefault((n, kind, w, d), []).append((a, f1))
    rows = []
    for key, vals in sorted(acc.items()):
        v = np.array(vals)
        rows.append((*key, float(v[:, 0].mean()), float(v[:, 1].mean())))
    return FIG7_HEADER, rows
