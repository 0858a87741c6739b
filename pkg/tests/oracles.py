"""Independent reference implementations used as test oracles.

Plain Python loops over lists; nothing here imports the package under test
except for reading attributes off its value objects.
"""

import math


def mean_std(xs):
    n = len(xs)
    m = sum(xs) / n
    return m, math.sqrt(sum((v - m) ** 2 for v in xs) / n)


def reference_loop(X, groups, tau, eps):
    """Straight-line grouping metric.

    ``X`` maps category name -> list of floats; ``groups`` is a list of lists
    of names. Walks the per-category statistics, the per-group statistics
    and then the upper-triangular pair loop.
    """
    U, D = {}, {}
    for name, row in X.items():
        U[name], D[name] = mean_std(row)

    K = len(groups)
    W_mean, W_std, W_ms = [0.0] * K, [0.0] * K, [0.0] * K
    for j, C in enumerate(groups):
        n = len(C)
        u_j = sum(U[m] for m in C) / n
        d_j = sum(D[m] for m in C) / n
        if n == 1:
            (m,) = C
            W_mean[j] = U[m]
            W_std[j] = D[m]
        else:
            W_mean[j] = sum(U[m] for m in C) / n
            W_std[j] = math.sqrt(sum((D[m] - d_j) ** 2 for m in C) / n)
        W_ms[j] = math.sqrt(sum((U[m] - u_j) ** 2 for m in C) / n)

    total = 0.0
    for j in range(K):
        L_ms = 0.0
        for k in range(j + 1, K):
            L_ms += math.exp((W_std[j] - W_std[k]) ** 2) + math.exp((W_mean[j] - W_mean[k]) ** 2)
        w = W_ms[j]
        L_group = 0.0 if w < 1e-12 else w / (eps + 1.0 / w + L_ms)
        total += math.log(tau + L_group)
    return total


def generalized_scheme(X, groups, tau, eps, q_fn, Q_fn, U_fn):
    """sum_j log(tau + q_j / (eps + Q_j + sum_{k>j} U_jk)) from plain stats.

    ``q_fn``/``Q_fn`` take the group's intra spread; ``U_fn`` takes
    (w_std_j, w_std_k, w_mean_j, w_mean_k).
    """
    stats = []
    for C in groups:
        us, ds = zip(*(mean_std(X[m]) for m in C))
        _, spread = mean_std(list(us))
        w_std = ds[0] if len(C) == 1 else mean_std(list(ds))[1]
        stats.append((sum(us) / len(us), w_std, spread))
    total = 0.0
    for j, (mj, sj, wj) in enumerate(stats):
        pair = sum(U_fn(sj, sk, mj, mk) for (mk, sk, _) in stats[j + 1:])
        total += math.log(tau + q_fn(wj) / (eps + Q_fn(wj) + pair))
    return total


def tcl_direct(scores, true_label, beta_plus, beta_minus, eta, gamma):
    """Top-C loss by explicit sort of the false classes (C-1 = len(beta_minus))."""
    false = sorted((i for i in range(len(scores)) if i != true_label),
                   key=lambda i: (-scores[i], i))
    value = math.log(eta + math.exp(gamma * (beta_plus - scores[true_label])))
    for rank, b in enumerate(beta_minus):
        value += math.log(eta + math.exp(gamma * (scores[false[rank]] - b)))
    return value


def bce_direct(scores, true_label):
    total = 0.0
    for i, s in enumerate(scores):
        s = min(max(s, 1e-12), 1 - 1e-12)
        total -= math.log(s) if i == true_label else math.log(1 - s)
    return total


def focal_direct(scores, true_label, gamma_f, alpha_f):
    total = 0.0
    for i, s in enumerate(scores):
        p, w = (s, alpha_f) if i == true_label else (1 - s, 1 - alpha_f)
        total -= w * (1 - p) ** gamma_f * math.log(min(max(p, 1e-12), 1 - 1e-12))
    return total


def ce_direct(scores, true_label):
    z = sum(math.exp(s) for s in scores)
    return -math.log(math.exp(scores[true_label]) / z)
