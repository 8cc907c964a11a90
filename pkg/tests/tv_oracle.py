"""Plain gradient descent on smoothed circular TV1 denoising, for cross-checks."""

import numpy as np


def tv1_cost(g, f, lam, eps):
    d = g - np.roll(g, 1)
    return 0.5 * np.sum((f - g) ** 2) + lam * np.sum(np.sqrt(eps + d * d))


def tv1_grad(g, f, lam, eps):
    d = g - np.roll(g, 1)
    t = d / np.sqrt(eps + d * d)
    return (g - f) + lam * (t - np.roll(t, -1))


def tv1_gradient_descent(f, lam, eps, tol=1e-9, max_iter=2_000_000):
    """Fixed step 1/L with L = 1 + 4 lam / sqrt(eps) bounding the Hessian."""
    step = 1.0 / (1.0 + 4.0 * lam / np.sqrt(eps))
    g = np.array(f, dtype=float)
    for _ in range(max_iter):
        grad = tv1_grad(g, f, lam, eps)
        if np.linalg.norm(grad) < tol:
            return g
        g -= step * grad
    raise RuntimeError("gradient descent did not reach tolerance")
