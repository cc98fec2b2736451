"""Multi-view information-bottleneck classifier.

Per-view encoders feed a fusion layer over the concatenated latents and a
classifier head. Training minimizes

    CE(y, y_hat) + sum_i beta_i * I(X_i; Z_i)

where CE is in nats and each mutual information is the matrix-based Renyi
estimate in bits (unit conversion is absorbed into ``beta_i``). With every
``beta_i == 0`` the same code path is the plain cross-entropy network.
"""

import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from meib import nn
from meib.entropy import (
    KernelConfig,
    estimate_sigma,
    mi_gradient_wrt_batch,
    mutual_information,
    normalized_gram,
)
from meib.errors import (
    ConfigError,
    DimensionError,
    InsufficientSamplesError,
    NumericError,
)

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass
class MultiViewBatch:
    views: list
    labels: np.ndarray

    def __post_init__(self):
        self.views = [np.asarray(v, dtype=np.float64) for v in self.views]
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if not self.views:
            raise DimensionError("a batch needs at least one view")
        n = len(self.labels)
        for i, v in enumerate(self.views):
            if v.ndim != 2 or v.shape[0] != n:
                raise DimensionError(f"view {i} has shape {v.shape}, expected ({n}, d)")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def view_dims(self) -> list:
        return [v.shape[1] for v in self.views]

    def subset(self, idx) -> "MultiViewBatch":
        return MultiViewBatch([v[idx] for v in self.views], self.labels[idx])


@dataclass
class MeibModel:
    encoders: list
    fusion: nn.Mlp
    classifier: nn.Mlp
    betas: list
    kernel_cfg: KernelConfig = field(default_factory=KernelConfig)

    def __post_init__(self):
        self.betas = [float(b) for b in self.betas]
        if len(self.encoders) != len(self.betas):
            raise ConfigError(f"{len(self.encoders)} encoders but {len(self.betas)} betas")
        if any(b < 0 for b in self.betas):
            raise ConfigError("betas must be non-negative")
        latent = sum(e.out_dim for e in self.encoders)
        if self.fusion.in_dim != latent:
            raise DimensionError(f"fusion in_dim {self.fusion.in_dim} != latent total {latent}")
        if self.classifier.in_dim != self.fusion.out_dim:
            raise DimensionError("classifier in_dim does not match fusion out_dim")

    @property
    def n_views(self) -> int:
        return len(self.encoders)

    @property
    def n_classes(self) -> int:
        return self.classifier.out_dim

    def networks(self) -> list:
        return [*self.encoders, self.fusion, self.classifier]

    def params(self) -> list:
        out = []
        for net in self.networks():
            out += net.params()
        return out

    def copy(self) -> "MeibModel":
        return MeibModel(
            [e.copy() for e in self.encoders],
            self.fusion.copy(),
            self.classifier.copy(),
            list(self.betas),
            self.kernel_cfg,
        )


def build_model(
    view_dims,
    encoder_hidden,
    fusion_width=256,
    n_classes=10,
    betas=None,
    seed=0,
    kernel_cfg=None,
    activation="relu",
) -> MeibModel:
    """Fresh model with ReLU encoders/fusion and a linear classifier head.

    ``encoder_hidden[i]`` lists the layer widths of encoder ``i``; its last
    entry is that view's latent dimension.
    """
    if len(view_dims) != len(encoder_hidden):
        raise ConfigError("one encoder topology per view is required")
    betas = [0.0] * len(view_dims) if betas is None else list(betas)
    seeds = np.random.SeedSequence(seed).spawn(len(view_dims) + 2)
    encoders = [
        nn.init_params(nn.chain_specs([d, *widths], activation), s)
        for d, widths, s in zip(view_dims, encoder_hidden, seeds)
    ]
    latent = sum(e.out_dim for e in encoders)
    fusion = nn.init_params([nn.LayerSpec(latent, fusion_width, activation)], seeds[-2])
    classifier = nn.init_params([nn.LayerSpec(fusion_width, n_classes, "identity")], seeds[-1])
    return MeibModel(encoders, fusion, classifier, betas, kernel_cfg or KernelConfig())


@dataclass
class JointForward:
    latents: list
    joint: np.ndarray
    logits: np.ndarray
    encoder_traces: list
    fusion_trace: nn.Trace
    classifier_trace: nn.Trace


def forward_joint(model: MeibModel, batch) -> JointForward:
    views = batch.views if isinstance(batch, MultiViewBatch) else batch
    if len(views) != model.n_views:
        raise DimensionError(f"model has {model.n_views} views, batch has {len(views)}")
    traces = [nn.forward(enc, v) for enc, v in zip(model.encoders, views)]
    latents = [t.output for t in traces]
    ftrace = nn.forward(model.fusion, np.concatenate(latents, axis=1))
    ctrace = nn.forward(model.classifier, ftrace.output)
    return JointForward(latents, ftrace.output, ctrace.output, traces, ftrace, ctrace)


@dataclass
class LossReport:
    total: float
    ce: float
    per_view_mi: list
    accuracy: float


@dataclass
class LossResult:
    report: LossReport
    grads: list
    ce_grads: list | None = None
    mi_grads: list | None = None


def _require_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        bad = int(np.size(arr) - np.count_nonzero(np.isfinite(arr)))
        raise NumericError(f"{bad} non-finite values in {name}")


def meib_loss(
    model: MeibModel,
    batch: MultiViewBatch,
    sigmas=None,
    with_mi=None,
    separate_paths=False,
) -> LossResult:
    """Objective value and gradients for every model parameter.

    ``sigmas`` optionally fixes the kernel widths per view as
    ``[(sigma_x, sigma_z), ...]``; otherwise they are estimated from the
    batch. ``with_mi[i]`` forces the mutual-information term for view ``i``
    to be evaluated even when its beta is zero (default: only when beta > 0).
    ``separate_paths`` additionally returns the cross-entropy gradients and
    the unscaled per-view mutual-information gradients.
    """
    if batch.n < 2:
        raise InsufficientSamplesError("the objective needs at least 2 samples")
    k = model.n_views
    if with_mi is None:
        with_mi = [b > 0 for b in model.betas]
    fw = forward_joint(model, batch)
    _require_finite("logits", fw.logits)
    ce, d_logits = nn.softmax_cross_entropy(fw.logits, batch.labels)

    mi = [float("nan")] * k
    d_latent_mi = [None] * k
    for i in range(k):
        if not (with_mi[i] or model.betas[i] > 0):
            continue
        sx, sz = sigmas[i] if sigmas is not None else (None, None)
        res = mi_gradient_wrt_batch(batch.views[i], fw.latents[i], model.kernel_cfg, sx, sz)
        mi[i] = res.value
        d_latent_mi[i] = res.d_input

    total = ce
    for i in range(k):
        if model.betas[i] > 0:
            total += model.betas[i] * mi[i]

    g_cls, d_joint = nn.backward(model.classifier, fw.classifier_trace, d_logits)
    g_fus, d_concat = nn.backward(model.fusion, fw.fusion_trace, d_joint)
    splits = np.cumsum([e.out_dim for e in model.encoders])[:-1]
    d_latent_ce = np.split(d_concat, splits, axis=1)

    enc_grads, ce_enc, mi_enc = [], [], []
    for i, enc in enumerate(model.encoders):
        upstream = d_latent_ce[i]
        if model.betas[i] > 0:
            upstream = upstream + model.betas[i] * d_latent_mi[i]
        g, _ = nn.backward(enc, fw.encoder_traces[i], upstream)
        enc_grads.append(g)
        if separate_paths:
            ce_enc.append(nn.backward(enc, fw.encoder_traces[i], d_latent_ce[i])[0])
            if d_latent_mi[i] is not None:
                mi_enc.append(nn.backward(enc, fw.encoder_traces[i], d_latent_mi[i])[0])
            else:
                mi_enc.append([np.zeros_like(p) for p in enc.params()])

    grads = [g for eg in enc_grads for g in eg] + g_fus + g_cls
    for g in grads:
        _require_finite("gradients", g)
    acc = float(np.mean(np.argmax(fw.logits, axis=1) == batch.labels))
    report = LossReport(float(total), float(ce), mi, acc)
    if not separate_paths:
        return LossResult(report, grads)

    ce_grads = [g for eg in ce_enc for g in eg] + g_fus + g_cls
    # MI-path gradients per view, laid out like model.params() (zeros elsewhere).
    mi_grads = []
    offsets = np.cumsum([0] + [len(e.params()) for e in model.encoders])
    for i in range(k):
        full = [np.zeros_like(p) for p in model.params()]
        full[offsets[i]:offsets[i + 1]] = mi_enc[i]
        mi_grads.append(full)
    return LossResult(report, grads, ce_grads, mi_grads)


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 100
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    seed: int = 0
    patience: int = 20
    probe_size: int = 200


@dataclass
class EpochRecord:
    epoch: int
    total: float
    ce: float
    per_view_mi: list
    accuracy: float


@dataclass
class TrainResult:
    model: MeibModel
    history: list
    epochs_run: int
    wall_ms: float


def _epoch_sigmas(model, data):
    fw = forward_joint(model, data)
    cfg = model.kernel_cfg
    return [
        (estimate_sigma(x, cfg.k_nn, cfg.sigma_floor), estimate_sigma(z, cfg.k_nn, cfg.sigma_floor))
        for x, z in zip(data.views, fw.latents)
    ]


def probe_mi(model: MeibModel, batch: MultiViewBatch) -> list:
    """Per-view ``I(X_i; Z_i)`` in bits on one batch."""
    fw = forward_joint(model, batch)
    cfg = model.kernel_cfg
    out = []
    for x, z in zip(batch.views, fw.latents):
        gx = normalized_gram(x, estimate_sigma(x, cfg.k_nn, cfg.sigma_floor))
        gz = normalized_gram(z, estimate_sigma(z, cfg.k_nn, cfg.sigma_floor))
        out.append(mutual_information(gx, gz, cfg.alpha))
    return out


def train(model: MeibModel, data: MultiViewBatch, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Mini-batch training, modifying ``model`` in place.

    Early-stops once the epoch's mean training objective has not improved
    for ``config.patience`` epochs. Each history entry records the epoch
    means plus ``I(X_i; Z_i)`` measured on a fixed probe subset.
    """
    if data.n == 0:
        raise InsufficientSamplesError("empty training set")
    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    opt = nn.make_optimizer(config.optimizer, config.learning_rate)
    probe = data.subset(np.arange(min(config.probe_size, data.n)))
    params = model.params()
    history = []
    best = np.inf
    stale = 0
    for epoch in range(config.epochs):
        order = rng.permutation(data.n)
        sigmas = _epoch_sigmas(model, data) if model.kernel_cfg.sigma_mode == "epoch" else None
        totals, ces, accs, sizes = [], [], [], []
        for lo in range(0, data.n, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            if len(idx) < 2:
                continue
            res = meib_loss(model, data.subset(idx), sigmas=sigmas)
            opt.step(params, res.grads)
            totals.append(res.report.total)
            ces.append(res.report.ce)
            accs.append(res.report.accuracy)
            sizes.append(len(idx))
        w = np.asarray(sizes, dtype=np.float64)
        rec = EpochRecord(
            epoch,
            float(np.average(totals, weights=w)),
            float(np.average(ces, weights=w)),
            probe_mi(model, probe) if probe.n >= 2 else [],
            float(np.average(accs, weights=w)),
        )
        history.append(rec)
        log.debug("epoch %d total=%.5f ce=%.5f mi=%s", epoch, rec.total, rec.ce, rec.per_view_mi)
        if rec.total < best - 1e-12:
            best = rec.total
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    wall = (time.perf_counter() - start) * 1000.0
    return TrainResult(model, history, len(history), wall)


def predict(model: MeibModel, batch) -> np.ndarray:
    """Class predictions; ties go to the lowest class index."""
    return np.argmax(forward_joint(model, batch).logits, axis=1)


def evaluate(model: MeibModel, data: MultiViewBatch) -> float:
    """Classification error fraction."""
    if data.n == 0:
        return 0.0
    return error_rate(forward_joint(model, data).logits, data.labels)


def error_rate(logits, labels) -> float:
    return float(np.mean(np.argmax(logits, axis=1) != np.asarray(labels)))


def input_weight_norms(model: MeibModel) -> list:
    """Per view, the l2 norm of each input feature's first-layer weights."""
    return [np.linalg.norm(e.weights[0], axis=0) for e in model.encoders]


def save_checkpoint(model: MeibModel, path) -> None:
    """Write ``model`` as an ``.npz`` archive with a JSON header."""
    header = {
        "format": "meib-checkpoint",
        "version": CHECKPOINT_VERSION,
        "view_dims": [e.in_dim for e in model.encoders],
        "encoders": [[asdict(s) for s in e.layers] for e in model.encoders],
        "fusion": [asdict(s) for s in model.fusion.layers],
        "classifier": [asdict(s) for s in model.classifier.layers],
        "betas": model.betas,
        "kernel": asdict(model.kernel_cfg),
    }
    arrays = {f"p{i:04d}": p for i, p in enumerate(model.params())}
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header)), **arrays)


def load_checkpoint(path) -> MeibModel:
    with np.load(path, allow_pickle=False) as z:
        header = json.loads(str(z["header"]))
        if header.get("format") != "meib-checkpoint":
            raise ConfigError(f"{path} is not a checkpoint")
        if header.get("version") != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {header.get('version')}")
        params = [z[f"p{i:04d}"] for i in range(len(z.files) - 1)]

    it = iter(params)

    def rebuild(spec_dicts):
        specs = [nn.LayerSpec(**s) for s in spec_dicts]
        weights, biases = [], []
        for _ in specs:
            weights.append(next(it).copy())
            biases.append(next(it).copy())
        return nn.Mlp(specs, weights, biases)

    encoders = [rebuild(s) for s in header["encoders"]]
    fusion = rebuild(header["fusion"])
    classifier = rebuild(header["classifier"])
    return MeibModel(encoders, fusion, classifier, header["betas"], KernelConfig(**header["kernel"]))
