"""Dense vector math, nonlinearities, initialization, and gradient checking.

Everything here is a pure function over float64 numpy arrays.  The gradient
checker is the oracle the model's hand-written backward passes are validated
against, so it must stay independent of them: it only evaluates the loss
function it is handed, never any analytic gradient code.
"""

import numpy as np


def affine(w, x, u, y):
    """w @ x + u @ y with shape validation.

    Shared form of the gate pre-activations: every gate is some
    W_a x_t + W_b h_{t-1}.
    """
    w = np.asarray(w)
    u = np.asarray(u)
    x = np.asarray(x)
    y = np.asarray(y)
    if w.shape[1] != x.shape[0]:
        raise ValueError(f"affine: W is {w.shape} but x has length {x.shape[0]}")
    if u.shape[1] != y.shape[0]:
        raise ValueError(f"affine: U is {u.shape} but y has length {y.shape[0]}")
    if w.shape[0] != u.shape[0]:
        raise ValueError(f"affine: W is {w.shape} but U is {u.shape}")
    return w @ x + u @ y


def sigm(z):
    """Numerically safe logistic sigmoid 1 / (1 + exp(-z))."""
    z = np.asarray(z)
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(u):
    """exp(u_i) / sum_j exp(u_j), computed with max subtraction."""
    u = np.asarray(u, dtype=np.float64)
    if u.size == 0:
        raise ValueError("softmax of an empty vector")
    shifted = u - np.max(u)
    e = np.exp(shifted)
    return e / np.sum(e)


def log_softmax(u):
    """log of softmax, stable for large magnitudes."""
    u = np.asarray(u, dtype=np.float64)
    if u.size == 0:
        raise ValueError("softmax of an empty vector")
    shifted = u - np.max(u)
    return shifted - np.log(np.sum(np.exp(shifted)))


def elementwise(op, a, b=None):
    """Dispatch table for the elementwise primitives: sigm, tanh, multiply, add."""
    a = np.asarray(a)
    if op in ("sigm", "tanh"):
        if b is not None:
            raise ValueError(f"{op} is unary")
        return sigm(a) if op == "sigm" else np.tanh(a)
    if op in ("multiply", "add"):
        if b is None:
            raise ValueError(f"{op} is binary")
        b = np.asarray(b)
        if a.shape != b.shape:
            raise ValueError(
                f"elementwise {op}: operand shapes {a.shape} and {b.shape} differ")
        return a * b if op == "multiply" else a + b
    raise ValueError(f"unknown elementwise op {op!r}")


def uniform_init(rng, shape, scale=0.08):
    """Weights drawn uniformly from [-scale, scale]."""
    return rng.uniform(-scale, scale, size=shape)


def spawn_generators(seed, n):
    """n independent generators derived from one root seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def grad_check(f, theta, eps=1e-5):
    """Max relative error between analytic and central-difference gradients.

    ``f(theta)`` must return ``(value, grad)`` where grad has theta's shape.
    For each coordinate the numeric gradient is
    (f(theta + eps e_i) - f(theta - eps e_i)) / (2 eps) and the error is
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    theta = np.asarray(theta, dtype=np.float64)
    value, grad = f(theta)
    if not np.isfinite(value):
        raise FloatingPointError(f"loss is not finite at theta: {value}")
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != theta.shape:
        raise ValueError(
            f"gradient shape {grad.shape} does not match theta shape {theta.shape}")
    worst = 0.0
    for i in range(theta.size):
        bump = np.zeros_like(theta)
        bump.flat[i] = eps
        up, _ = f(theta + bump)
        down, _ = f(theta - bump)
        if not (np.isfinite(up) and np.isfinite(down)):
            raise FloatingPointError(f"loss not finite near theta at coordinate {i}")
        numeric = (up - down) / (2.0 * eps)
        analytic = grad.flat[i]
        err = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
        worst = max(worst, err)
    return worst


def global_norm(arrays):
    """L2 norm of all entries of all arrays taken together."""
    total = 0.0
    for a in arrays:
        total += float(np.sum(np.square(a)))
    return float(np.sqrt(total))
