"""Multi-layer spiking network: forward pass, FO-STDGD backward pass, training.

Training follows the spike-timing-dependent fractional rule: at every window
boundary the per-neuron surrogate error xi is backpropagated through the
rate-domain chain, gated by whether each neuron spiked inside the window,
and every synapse takes a fractional gradient step whose magnitude carries
the factor |w_now - w_prev + eps|^(1-alpha) / Gamma(2-alpha) computed from
that synapse's own last applied update. The xi and presynaptic-rate factors
entering a step are the ones cached from the previous processing of the
same window position (one-iteration-stale, which is what makes the rule
local in time).
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import encoding
from .data import shuffled_indices
from .errors import ConfigError, DivergenceError, ShapeError
from .fracgrad import gamma_fn
from .metrics import MetricsRow, RunMetrics
from .neuron import LayerState, NeuronParams

# Roles for deriving independent, reproducible random streams from one seed.
_STREAM_INIT = 0
_STREAM_TRAIN_ENCODE = 2
_STREAM_EVAL_ENCODE = 3


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture sizes plus every training hyperparameter.

    Defaults are the published FO-STDGD MNIST settings: T=100, tau=50,
    theta=15, mu=0.00033, beta=2.0, batch size 50, eps=1e-5, alpha=1.9.
    """

    layer_sizes: tuple
    theta: float = 15.0
    tau: int = 50
    T: int = 100
    alpha: float = 1.9
    mu: float = 0.00033
    beta: float = 2.0
    epsilon: float = 1e-5
    batch_size: int = 50
    seed: int = 0
    rate_scale: float = 0.25
    weight_init_stddev: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))
        if len(self.layer_sizes) < 2:
            raise ConfigError(f"need at least input and output layers, got {self.layer_sizes}")
        if any(n <= 0 for n in self.layer_sizes):
            raise ConfigError(f"every layer must have at least one neuron, got {self.layer_sizes}")
        if not (self.theta > 0.0):
            raise ConfigError(f"theta must be > 0, got {self.theta}")
        if not (isinstance(self.tau, int) and 1 < self.tau <= self.T):
            raise ConfigError(f"tau must be an integer in (1, T], got tau={self.tau}, T={self.T}")
        if self.T % self.tau != 0:
            raise ConfigError(f"T must be a multiple of tau, got T={self.T}, tau={self.tau}")
        if not (0.0 < self.alpha < 2.0):
            raise ConfigError(f"alpha must be in (0, 2), got {self.alpha}")
        if not (self.mu >= 0.0 and math.isfinite(self.mu)):
            raise ConfigError(f"mu must be finite and >= 0, got {self.mu}")
        if not (self.epsilon > 0.0):
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if not (isinstance(self.batch_size, int) and self.batch_size >= 1):
            raise ConfigError(f"batch_size must be a positive integer, got {self.batch_size}")
        if not (0.0 < self.rate_scale <= 1.0):
            raise ConfigError(f"rate_scale must be in (0, 1], got {self.rate_scale}")
        if not (self.weight_init_stddev >= 0.0):
            raise ConfigError(f"weight_init_stddev must be >= 0, got {self.weight_init_stddev}")

    @property
    def gamma(self):
        """Activation gain 1/theta."""
        return 1.0 / self.theta

    @property
    def n_windows(self):
        return self.T // self.tau

    @property
    def n_layers(self):
        """Number of weighted layers (hidden + output)."""
        return len(self.layer_sizes) - 1

    @property
    def inv_gamma_2ma(self):
        """1 / Gamma(2 - alpha), the fractional-coefficient normalization."""
        return 1.0 / gamma_fn(2.0 - self.alpha)

    def neuron_params(self):
        return NeuronParams(theta=self.theta, tau=self.tau)

    def to_dict(self):
        d = asdict(self)
        d["layer_sizes"] = list(self.layer_sizes)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: (tuple(v) if k == "layer_sizes" else v) for k, v in d.items()})


class SynapseStore:
    """Per-layer weights plus the previous-iteration state the update needs.

    w_previous always holds the pre-update value of w_current from the most
    recent applied update. `cached` maps a window index to the (s_hat list,
    xi list) recorded the last time that window position was processed;
    it is empty before the first update, which triggers the integer-order
    bootstrap step.
    """

    def __init__(self, w_current):
        self.w_current = [np.array(w, dtype=float) for w in w_current]
        self.w_previous = [w.copy() for w in self.w_current]
        self.cached = {}
        self.update_count = 0

    @property
    def layer_sizes(self):
        return tuple([self.w_current[0].shape[1]] + [w.shape[0] for w in self.w_current])

    def clear_cache(self):
        self.cached = {}


def init_network(config):
    """Standard-normal weight initialization from a deterministic generator."""
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), _STREAM_INIT]))
    sizes = config.layer_sizes
    weights = [
        config.weight_init_stddev * rng.standard_normal((sizes[i + 1], sizes[i]))
        for i in range(config.n_layers)
    ]
    return SynapseStore(weights)


@dataclass
class ForwardRecord:
    """Everything one simulated sample leaves behind.

    rasters[l] is the (n_l, T) bool spike raster of layer l (0 = input).
    s_hat[w][l] is layer l's firing-rate vector at window boundary w;
    u_hat[w][l] the matching mean pre-reset potential (None for the input
    layer, which has no membrane). potentials[l-1] holds the pre-reset
    membrane candidates of weighted layer l when tracing was requested.
    """

    rasters: list
    s_hat: list
    u_hat: list
    potentials: list = None


def forward_sample(store, input_raster, config, record_potentials=False):
    """Simulate every layer for T steps, accumulating only active columns.

    Membrane state starts from rest: samples are independent trials.
    Window statistics are recorded at each t with t % tau == 0 (1-based t).
    """
    input_raster = np.asarray(input_raster, dtype=bool)
    sizes = config.layer_sizes
    T, tau = config.T, config.tau
    if input_raster.shape != (sizes[0], T):
        raise ShapeError(
            f"input raster shape {input_raster.shape} != ({sizes[0]}, {T})"
        )
    params = config.neuron_params()
    states = [LayerState(n, params) for n in sizes[1:]]
    rasters = [input_raster] + [np.zeros((n, T), dtype=bool) for n in sizes[1:]]
    potentials = [np.zeros((n, T)) for n in sizes[1:]] if record_potentials else None

    window_s = []
    window_u = []
    for t in range(T):
        active = np.flatnonzero(input_raster[:, t])
        for li, state in enumerate(states):
            w = store.w_current[li]
            if active.size:
                drive = w[:, active].sum(axis=1)
            else:
                drive = np.zeros(state.n)
            spiked = state.step(drive)
            rasters[li + 1][:, t] = spiked
            if record_potentials:
                # Pre-reset candidate: post-step u plus the fire-ring slot.
                slot = (state.steps - 1) % tau
                potentials[li][:, t] = state.u + state.fire_ring[slot]
            active = np.flatnonzero(spiked)
        if (t + 1) % tau == 0:
            s_layers = [rasters[0][:, t + 1 - tau : t + 1].sum(axis=1) / tau]
            u_layers = [None]
            for state in states:
                counts, fire_sums = state.window_counts()
                s_layers.append(counts / tau)
                u_layers.append(fire_sums / tau)
            window_s.append(s_layers)
            window_u.append(u_layers)
    return ForwardRecord(rasters=rasters, s_hat=window_s, u_hat=window_u, potentials=potentials)


def xi_output(r, s_hat, spiked_in_window, config):
    """Output-layer surrogate error: -2*gamma*beta*(r - s_hat), spike-gated."""
    gate = np.where(spiked_in_window, 1.0, 0.0)
    return -2.0 * config.gamma * config.beta * (np.asarray(r, dtype=float) - s_hat) * gate


def xi_hidden(upstream_xi, upstream_weights_column, spiked_in_window, config):
    """Hidden-layer surrogate error: gamma * (xi^{l+1} . w^{l+1}_{:,i}), spike-gated."""
    upstream_xi = np.asarray(upstream_xi, dtype=float)
    upstream_weights_column = np.asarray(upstream_weights_column, dtype=float)
    if upstream_xi.shape != upstream_weights_column.shape:
        raise ShapeError(
            f"xi shape {upstream_xi.shape} != weight column shape {upstream_weights_column.shape}"
        )
    if not spiked_in_window:
        return 0.0
    return config.gamma * float(np.dot(upstream_xi, upstream_weights_column))


def fractional_gradient(xi, s_hat_pre_prev, w_now, w_prev, config):
    """Per-synapse fractional loss gradient.

    xi * s_hat / Gamma(2-alpha) * |w_now - w_prev + eps|^(1-alpha); at
    alpha = 1 the coefficient is identically 1 and the product xi * s_hat
    is returned exactly. Broadcasts over array arguments.
    """
    base = np.asarray(xi, dtype=float) * np.asarray(s_hat_pre_prev, dtype=float)
    if config.alpha == 1.0:
        return base
    coeff = np.abs(np.asarray(w_now) - np.asarray(w_prev) + config.epsilon) ** (1.0 - config.alpha)
    return base * coeff * config.inv_gamma_2ma


def _xi_stack(store, s_now, teaching, config):
    """Current-window xi for the output layer then hidden layers in reverse."""
    L = config.n_layers
    xi = [None] * (L + 1)
    xi[L] = xi_output(teaching, s_now[L], s_now[L] > 0, config)
    for l in range(L - 1, 0, -1):
        # gamma * W^{l+1}^T xi^{l+1}, gated by this layer's window spikes.
        back = store.w_current[l].T @ xi[l + 1]
        xi[l] = config.gamma * back * (s_now[l] > 0)
    return xi


def backward_window(store, record, teaching, window_index, config):
    """Per-layer loss-gradient matrices for one window boundary.

    Gradients combine the cached previous-iteration xi and presynaptic
    rates with the current/previous weight difference, then the cache is
    refreshed with this window's values for the next iteration. The first
    time a window position is seen there is no cache and no weight history,
    so the step is taken integer-order from the current window (bootstrap).
    """
    teaching = np.asarray(teaching, dtype=float)
    L = config.n_layers
    if teaching.shape != (config.layer_sizes[-1],):
        raise ShapeError(
            f"teaching signal shape {teaching.shape} != ({config.layer_sizes[-1]},)"
        )
    if not (0 <= window_index < len(record.s_hat)):
        raise ValueError(f"window index {window_index} out of range")
    s_now = record.s_hat[window_index]
    xi_now = _xi_stack(store, s_now, teaching, config)

    cache = store.cached.get(window_index)
    if cache is None:
        s_src, xi_src, fractional = s_now, xi_now, False
    else:
        (s_src, xi_src), fractional = cache, config.alpha != 1.0

    inv_g = config.inv_gamma_2ma
    power = 1.0 - config.alpha
    grads = []
    for li in range(L):
        post = np.flatnonzero(xi_src[li + 1])
        pre = np.flatnonzero(s_src[li])
        g = np.zeros_like(store.w_current[li])
        if post.size and pre.size:
            sub = np.ix_(post, pre)
            block = np.outer(xi_src[li + 1][post], s_src[li][pre])
            if fractional:
                dw = store.w_current[li][sub] - store.w_previous[li][sub]
                block = block * (np.abs(dw + config.epsilon) ** power) * inv_g
            g[sub] = block
        grads.append(g)

    store.cached[window_index] = (s_now, xi_now)
    return grads


def apply_update(store, gradients, config):
    """Rotate previous <- current, then step current weights down-gradient."""
    if len(gradients) != len(store.w_current):
        raise ShapeError(f"{len(gradients)} gradient matrices for {len(store.w_current)} layers")
    for g, w in zip(gradients, store.w_current):
        if np.shape(g) != w.shape:
            raise ShapeError(f"gradient shape {np.shape(g)} != weight shape {w.shape}")
    for li, g in enumerate(gradients):
        np.copyto(store.w_previous[li], store.w_current[li])
        store.w_current[li] -= config.mu * g
    store.update_count += 1


def train_encode_stream(config, epoch, position):
    """Generator used to encode the training sample at one shuffled position."""
    return np.random.default_rng(
        np.random.SeedSequence([int(config.seed), _STREAM_TRAIN_ENCODE, int(epoch), int(position)])
    )


def eval_encode_stream(config, index):
    """Generator used to encode test sample `index`; independent of training order."""
    return np.random.default_rng(
        np.random.SeedSequence([int(config.seed), _STREAM_EVAL_ENCODE, int(index)])
    )


def train(store, dataset, config, epochs, metrics_sink=None, eval_fn=None, eval_every=0):
    """Run FO-STDGD over the dataset for the given number of epochs.

    Samples are visited in a per-epoch shuffled order; every window boundary
    of every sample applies one weight update (the batch is only the
    metrics-aggregation unit). Emits one metrics row per batch_size samples
    (plus a trailing partial batch at each epoch end) and returns the
    accumulated RunMetrics. Deterministic for a fixed (config, dataset).
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    n_out = config.layer_sizes[-1]
    metrics = RunMetrics()
    iteration = 0
    batch_losses = []
    batch_hits = []

    def flush_batch(epoch):
        nonlocal iteration
        if not batch_losses:
            return
        iteration += 1
        test_acc = None
        if eval_fn is not None and eval_every > 0 and iteration % eval_every == 0:
            test_acc = eval_fn(store)
        row = MetricsRow(
            iteration=iteration,
            epoch=epoch,
            batch_loss=float(np.mean(batch_losses)),
            batch_accuracy=float(np.mean(batch_hits)),
            test_accuracy=test_acc,
            wall_ms=0.0,
        )
        metrics.append(row)
        if metrics_sink is not None:
            metrics_sink(row)
        batch_losses.clear()
        batch_hits.clear()

    for epoch in range(epochs):
        order = shuffled_indices(len(dataset), config.seed, epoch)
        for pos, idx in enumerate(order):
            stream = train_encode_stream(config, epoch, pos)
            raster = encoding.poisson_encode(
                dataset.images[idx], config.T, config.rate_scale, stream
            )
            r = encoding.teaching_signal(int(dataset.labels[idx]), n_out)
            rec = forward_sample(store, raster, config)
            win_losses = []
            for wi in range(config.n_windows):
                grads = backward_window(store, rec, r, wi, config)
                apply_update(store, grads, config)
                win_losses.append(encoding.loss(r, rec.s_hat[wi][-1], config.beta))
            sample_loss = float(np.mean(win_losses))
            if not math.isfinite(sample_loss):
                raise DivergenceError(
                    f"non-finite loss at iteration {iteration + 1}", iteration=iteration + 1
                )
            batch_losses.append(sample_loss)
            batch_hits.append(
                1.0 if encoding.classify(rec.rasters[-1]) == int(dataset.labels[idx]) else 0.0
            )
            if len(batch_losses) == config.batch_size:
                flush_batch(epoch)
        flush_batch(epoch)
    return metrics


def evaluate(store, dataset, config, limit=None):
    """Test accuracy and mean loss over a dataset; no weight mutation."""
    ds = dataset.subset(limit)
    if len(ds) == 0:
        raise ValueError("evaluation dataset is empty")
    n_out = config.layer_sizes[-1]
    hits = 0
    losses = np.empty(len(ds))
    for idx in range(len(ds)):
        stream = eval_encode_stream(config, idx)
        raster = encoding.poisson_encode(ds.images[idx], config.T, config.rate_scale, stream)
        rec = forward_sample(store, raster, config)
        if encoding.classify(rec.rasters[-1]) == int(ds.labels[idx]):
            hits += 1
        r = encoding.teaching_signal(int(ds.labels[idx]), n_out)
        losses[idx] = np.mean(
            [encoding.loss(r, rec.s_hat[wi][-1], config.beta) for wi in range(config.n_windows)]
        )
    return hits / len(ds), float(losses.mean())


def rate_surrogate_forward(store, input_rates, b_offsets, config):
    """Deterministic differentiable rate network mirroring the spiking one.

    Per layer: u_hat = W @ s_hat_in (the tau-step accumulation of constant
    rates collapses to one affine map), then the piecewise-linear activation
    s_hat = gamma * (u_hat - b) above the theta/tau threshold, 0 below.
    Exists as the analytic/finite-difference oracle for the rate-domain
    chain rule, not for training. Returns the per-layer rate vectors.
    """
    rates, _ = _surrogate_states(store, input_rates, b_offsets, config)
    return rates


def _surrogate_states(store, input_rates, b_offsets, config):
    input_rates = np.asarray(input_rates, dtype=float)
    if input_rates.shape != (config.layer_sizes[0],):
        raise ShapeError(
            f"input rates shape {input_rates.shape} != ({config.layer_sizes[0]},)"
        )
    kink = config.theta / config.tau
    s = input_rates
    rates = []
    u_hats = []
    for li, w in enumerate(store.w_current):
        b = np.asarray(b_offsets[li], dtype=float)
        if b.shape != (w.shape[0],):
            raise ShapeError(f"offset shape {b.shape} != ({w.shape[0]},) in layer {li + 1}")
        u = w @ s
        s = np.where(u >= kink, config.gamma * (u - b), 0.0)
        rates.append(s)
        u_hats.append(u)
    return rates, u_hats


def rate_surrogate_gradients(store, input_rates, b_offsets, teaching, config):
    """Analytic weight gradients of the rate-surrogate squared-error loss.

    Backpropagates dL/ds -> dL/du = dL/ds * gamma * [u >= theta/tau] ->
    dL/ds_prev = W^T dL/du through the surrogate network; the weight
    gradient of layer l is outer(dL/du_l, s_{l-1}).
    """
    teaching = np.asarray(teaching, dtype=float)
    rates, u_hats = _surrogate_states(store, input_rates, b_offsets, config)
    kink = config.theta / config.tau
    dL_ds = -2.0 * config.beta * (teaching - rates[-1])
    grads = [None] * config.n_layers
    for li in range(config.n_layers - 1, -1, -1):
        dL_du = dL_ds * config.gamma * (u_hats[li] >= kink)
        below = rates[li - 1] if li > 0 else np.asarray(input_rates, dtype=float)
        grads[li] = np.outer(dL_du, below)
        dL_ds = store.w_current[li].T @ dL_du
    return grads


def homeostasis_report(store, config):
    """Per-layer L1-norm diagnostics for the ||w_i||_1 < theta assumption.

    The assumption underlies the activation bound but is not enforced
    during training (standard-normal initialization already violates it for
    wide fan-in); this report makes the violation visible per layer.
    """
    report = []
    for li, w in enumerate(store.w_current):
        norms = np.abs(w).sum(axis=1)
        report.append(
            {
                "layer": li + 1,
                "max_row_l1": float(norms.max()),
                "fraction_violating": float((norms >= config.theta).mean()),
            }
        )
    return report
