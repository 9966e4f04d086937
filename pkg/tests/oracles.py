"""Independent reference implementations used as test oracles.

Nothing here imports the package's network/fracgrad internals: forward
simulation, the integer-order trainer, the Caputo quadrature and the cost
scan are all written from scratch so they can disagree with the
implementation under test.
"""

import math

import numpy as np
from scipy.integrate import quad


def gamma_quadrature(x):
    """Gamma(x) by adaptive quadrature of the defining integral."""
    head, _ = quad(lambda t: t ** (x - 1) * math.exp(-t), 0, 1, epsabs=1e-14, epsrel=1e-13, limit=200)
    tail, _ = quad(lambda t: t ** (x - 1) * math.exp(-t), 1, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)
    return head + tail


def caputo_quadrature(a, b, c, x0, x, alpha):
    """Caputo derivative of a*t^2 + b*t + c by weighted quadrature.

    1/Gamma(1-alpha) * int_0^{x-x0} f'(x - v) v^(-alpha) dv, with the
    v^(-alpha) endpoint singularity handled by quad's algebraic weight.
    """
    val, _ = quad(
        lambda v: 2.0 * a * (x - v) + b,
        0.0,
        x - x0,
        weight="alg",
        wvar=(-alpha, 0.0),
        epsabs=1e-13,
        epsrel=1e-12,
    )
    return val / math.gamma(1.0 - alpha)


def dense_forward(weights, input_raster, theta, tau):
    """Reference spiking forward pass: dense matmuls, explicit reset/clamp.

    Returns (rasters, window_s_hat, window_u_hat) where rasters[0] is the
    input and window lists are indexed [window][layer].
    """
    input_raster = np.asarray(input_raster, dtype=float)
    n_in, T = input_raster.shape
    sizes = [n_in] + [w.shape[0] for w in weights]
    u = [np.zeros(n) for n in sizes[1:]]
    rasters = [input_raster.astype(bool)] + [np.zeros((n, T), dtype=bool) for n in sizes[1:]]
    fire_pot = [np.zeros((n, T)) for n in sizes[1:]]
    window_s, window_u = [], []
    for t in range(T):
        s_prev = input_raster[:, t]
        for li, w in enumerate(weights):
            cand = np.maximum(0.0, u[li] + w.dot(s_prev))
            spiked = cand >= theta
            rasters[li + 1][:, t] = spiked
            fire_pot[li][:, t] = np.where(spiked, cand, 0.0)
            u[li] = np.where(spiked, 0.0, cand)
            s_prev = spiked.astype(float)
        if (t + 1) % tau == 0:
            lo = t + 1 - tau
            s_layers = [rasters[0][:, lo : t + 1].sum(axis=1) / tau]
            u_layers = [None]
            for li in range(len(weights)):
                s_layers.append(rasters[li + 1][:, lo : t + 1].sum(axis=1) / tau)
                u_layers.append(fire_pot[li][:, lo : t + 1].sum(axis=1) / tau)
            window_s.append(s_layers)
            window_u.append(u_layers)
    return rasters, window_s, window_u


class IntegerOrderTrainer:
    """Stand-alone integer-order spike-timing-dependent trainer.

    Replicates the published training discipline at alpha = 1 (gradient =
    cached xi times cached presynaptic rate, caches refreshed per window
    position, previous-weights rotation on every update) on top of the
    dense_forward reference. Stream derivation constants match the
    documented seed contract: init 0, shuffle 1, train encoding 2.
    """

    def __init__(self, layer_sizes, theta, tau, T, mu, beta, seed, rate_scale):
        self.sizes = tuple(layer_sizes)
        self.theta = theta
        self.tau = tau
        self.T = T
        self.mu = mu
        self.beta = beta
        self.seed = seed
        self.rate_scale = rate_scale
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        self.w = [rng.standard_normal((self.sizes[i + 1], self.sizes[i]))
                  for i in range(len(self.sizes) - 1)]
        self.w_prev = [w.copy() for w in self.w]
        self.cache = {}

    def encode(self, pixels, epoch, position):
        rng = np.random.default_rng(
            np.random.SeedSequence([self.seed, 2, int(epoch), int(position)])
        )
        p = pixels * self.rate_scale
        return rng.random((pixels.size, self.T)) < p[:, None]

    def train_sample(self, pixels, label, epoch, position):
        raster = self.encode(pixels, epoch, position)
        _, window_s, _ = dense_forward(self.w, raster, self.theta, self.tau)
        gamma = 1.0 / self.theta
        n_layers = len(self.w)
        r = np.zeros(self.sizes[-1])
        r[label] = 1.0
        for wi, s_layers in enumerate(window_s):
            xi = [None] * (n_layers + 1)
            xi[n_layers] = -2.0 * gamma * self.beta * (r - s_layers[n_layers]) * (s_layers[n_layers] > 0)
            for l in range(n_layers - 1, 0, -1):
                xi[l] = gamma * self.w[l].T.dot(xi[l + 1]) * (s_layers[l] > 0)
            s_src, xi_src = self.cache.get(wi, (s_layers, xi))
            grads = [np.outer(xi_src[li + 1], s_src[li]) for li in range(n_layers)]
            self.cache[wi] = (s_layers, xi)
            for li in range(n_layers):
                self.w_prev[li] = self.w[li].copy()
                self.w[li] = self.w[li] - self.mu * grads[li]

    def train(self, images, labels, epochs=1, snapshot_every=None):
        """Returns weight snapshots: list of (sample_counter, [W...])."""
        snaps = []
        counter = 0
        for epoch in range(epochs):
            order = np.random.default_rng(
                np.random.SeedSequence([self.seed, 1, epoch])
            ).permutation(len(images))
            for pos, idx in enumerate(order):
                self.train_sample(images[idx], int(labels[idx]), epoch, pos)
                counter += 1
                if snapshot_every and counter % snapshot_every == 0:
                    snaps.append((counter, [w.copy() for w in self.w]))
        snaps.append((counter, [w.copy() for w in self.w]))
        return snaps


def brute_force_cost(error_trajectory, err_levels, complexity):
    """Eq-23 style cost by explicit scan; None when no level is reached."""
    hits = []
    for level in err_levels:
        found = None
        for epoch, err in enumerate(error_trajectory, start=1):
            if err <= level:
                found = epoch
                break
        if found is not None:
            hits.append(found)
    if not hits:
        return None
    return sum(hits) / len(hits) * complexity


def finite_difference_gradient(loss_fn, weights, layer, i, j, h=1e-6):
    """Central finite difference of loss_fn with respect to weights[layer][i, j]."""
    w = weights[layer]
    orig = w[i, j]
    w[i, j] = orig + h
    up = loss_fn()
    w[i, j] = orig - h
    down = loss_fn()
    w[i, j] = orig
    return (up - down) / (2.0 * h)
