"""Independent oracles used by the test suite.

Each routine here deliberately avoids the code paths it is used to check:
the eigensolver is a plain cyclic Jacobi sweep, AUC comes from pairwise
rank counting, minima come from dense grid refinement or projected
gradient descent, and gradients come from central differences.
"""

import numpy as np


def jacobi_eigh(a, sweeps=100, tol=1e-12):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues descending, eigenvectors as columns).
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-30:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / a[p, q]
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) \
                    if theta != 0.0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    evals = np.diag(a).copy()
    order = np.argsort(evals)[::-1]
    return evals[order], v[:, order]


def rank_auc(scores, novel_mask):
    """P(random novel score < random known score), ties counting 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    novel_mask = np.asarray(novel_mask, dtype=bool)
    novel = scores[novel_mask]
    known = scores[~novel_mask]
    less = (novel[:, None] < known[None, :]).sum()
    ties = (novel[:, None] == known[None, :]).sum()
    return (less + 0.5 * ties) / (novel.size * known.size)


def refine_grid_min_2d(f, lo, hi, grid=61, rounds=8):
    """Minimize a 2-D function by repeated dense grid refinement."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    best_x, best_f = None, np.inf
    for _ in range(rounds):
        xs = np.linspace(lo[0], hi[0], grid)
        ys = np.linspace(lo[1], hi[1], grid)
        for xv in xs:
            for yv in ys:
                val = f(np.array([xv, yv]))
                if val < best_f:
                    best_f, best_x = val, np.array([xv, yv])
        span = (hi - lo) / (grid - 1)
        lo = best_x - 2.0 * span
        hi = best_x + 2.0 * span
    return best_x, best_f


def central_diff_gradient(f, x, h=1e-6):
    """Central finite differences of a scalar function, coordinate-wise."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = h * max(1.0, abs(x[i]))
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return grad


def project_box_simplex(v, cap):
    """Euclidean projection onto {0 <= a_i <= cap, sum a_i = 1}.

    sum(clip(v - tau, 0, cap)) is piecewise linear and non-increasing in
    tau; scan its breakpoints and solve the crossing segment exactly.
    """
    v = np.asarray(v, dtype=np.float64)
    pts = np.unique(np.concatenate([v, v - cap]))
    totals = np.clip(v[None, :] - pts[:, None], 0.0, cap).sum(axis=1)
    if totals[0] <= 1.0:
        tau = pts[0]        # every coordinate capped already reaches <= 1
    else:
        j = int(np.searchsorted(-totals, -1.0, side="right")) - 1
        j = min(max(j, 0), pts.size - 2)
        mid = 0.5 * (pts[j] + pts[j + 1])      # active set is constant inside
        active = np.count_nonzero((v - mid > 0.0) & (v - mid < cap))
        tau = pts[j] + (totals[j] - 1.0) / max(active, 1)
    return np.clip(v - tau, 0.0, cap)


def ocsvm_projected_gradient(k, nu, iters=50_000):
    """Slow projected-gradient solve of min 0.5 a'Ka on the capped simplex."""
    k = np.asarray(k, dtype=np.float64)
    l_count = k.shape[0]
    cap = 1.0 / (nu * l_count)
    evals, _ = np.linalg.eigh(k)
    step = 1.0 / max(float(evals[-1]), 1e-12)
    a = project_box_simplex(np.full(l_count, 1.0 / l_count), cap)
    for _ in range(iters):
        a_next = project_box_simplex(a - step * (k @ a), cap)
        if np.max(np.abs(a_next - a)) < 1e-15:
            a = a_next
            break
        a = a_next
    return a, 0.5 * float(a @ k @ a)


def random_dataset(rng, n_bags=6, n_classes=3, dim=2, max_bag=4, allow_empty=True):
    """Random bags with arbitrary label subsets (for objective/gradient math)."""
    from miml_novelty.model import Bag, LabeledDataset

    known = tuple("abcdefgh"[:n_classes])
    bags = []
    for i in range(n_bags):
        m = int(rng.integers(1, max_bag + 1))
        lo = 0 if allow_empty else 1
        size = int(rng.integers(lo, n_classes + 1))
        labels = rng.choice(n_classes, size=size, replace=False) if size else []
        bags.append(Bag(bag_id=str(i), instances=rng.standard_normal((m, dim)),
                        labels=frozenset(known[j] for j in labels)))
    return LabeledDataset(bags, known)


def random_model(rng, dataset, gamma=0.5, lam=0.1, scale=1.0):
    """ScoreModel over the dataset's instances with random weights."""
    from miml_novelty.kernel import KernelConfig
    from miml_novelty.model import ScoreModel

    c = len(dataset.known_labels)
    l_count = dataset.instance_count
    return ScoreModel(kernel=KernelConfig(gamma), lam=lam,
                      training=dataset.instances.copy(),
                      alphas=scale * rng.standard_normal((c, l_count)),
                      label_order=dataset.known_labels)
