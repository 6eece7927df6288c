# Copyright 2026 The spgnet developers.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

# http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Verification suites run by ``spgnet check``.

``grad`` compares tape gradients of every op and block against central differences in double precision,
``invariants`` checks exact structural properties (normalization statistics, region locality, warp identities),
``oracle`` compares against brute-force or closed-form references. ``scale`` builds the full-size generator
and is not part of ``all``.
"""

import logging
from collections import OrderedDict

import numpy as np
from pandas import DataFrame

from . import tensor as T
from .deform import FeatureWarp, FlowField, gate
from .exceptions import SpgError, ValidationError
from .gradcheck import MIN_COORDINATES, grad_check
from .losses import (FeatureExtractor, LossWeights, discriminator_loss, full_objective, generator_loss, l1_loss,
                     perceptual_loss)
from .metrics import masked_ssim, miou, ssim
from .models import Discriminator, ModelConfig, PATBlock, SPGBlock, SPGNetModel, spatn_forward, SPATNModel
from .norm import SEANParams, SPADEParams, normalize, spade_variant
from .pose import KAPPA, Keypoints, LimbSet, NUM_JOINTS, POSE_CHANNELS, distance_map, segment_distance
from .semantics import SemanticMap, StyleCodes, cross_entropy, one_hot, region_average_pool, style_broadcast
from .synth import synth_dataset
from .tensor import ParamStore, Tensor


LOGGER = logging.getLogger(__name__)


GRAD = "grad"
INVARIANTS = "invariants"
ORACLE = "oracle"
SCALE = "scale"
ALL = "all"
DEFAULT_SUITES = (GRAD, INVARIANTS, ORACLE)

COLUMNS = ["suite", "check", "passed", "detail"]

SUITES = OrderedDict((name, OrderedDict()) for name in DEFAULT_SUITES + (SCALE,))

FLOW_MAE_BOUND = 0.02
DISTANCE_ORACLE_CASES = 1000
DISTANCE_ORACLE_TOLERANCE = 1e-4

# one tensor per generator component, a few coordinates each
GENERATOR_GROUPS = ("style.", "appearance.stem.", "appearance.warp.0.", "pose.res.1.", "bottleneck.",
                    "decoder.up.0.", "decoder.block.0.norm_fuse.", "decoder.block.1.conv_out.", "head.")
GENERATOR_COORDINATES = 4


def check(suite):
    """Register a check function returning ``(passed, detail)`` under ``suite``."""
    def register(func):
        SUITES[suite][func.__name__] = func
        return func
    return register


def run_check(suite, name):
    func = SUITES[suite][name]
    try:
        passed, detail = func()
    except (SpgError, AssertionError, ValueError, ArithmeticError) as error:
        passed, detail = False, "%s: %s" % (type(error).__name__, error)
    passed = bool(passed)
    if passed:
        LOGGER.info("[%s] %s passed: %s", suite, name, detail)
    else:
        LOGGER.error("[%s] %s FAILED: %s", suite, name, detail)
    return suite, name, passed, detail


def run_suite(name=ALL):
    """
    Run one suite, or every default suite for "all".

    Returns
    -------
    DataFrame
        One row per check: suite, check, passed, detail.

    Raises
    ------
    ValidationError
        On an unknown suite name.
    """
    if name == ALL:
        names = DEFAULT_SUITES
    elif name in SUITES:
        names = (name,)
    else:
        raise ValidationError("unknown suite %r, choose from %s" % (name, ", ".join(tuple(SUITES) + (ALL,))))
    rows = [run_check(suite, check_name) for suite in names for check_name in SUITES[suite]]
    table = DataFrame(rows, columns=COLUMNS)
    LOGGER.info("%i of %i checks passed", int(table["passed"].sum()), len(table))
    return table


# Gradient suite


def _tiny_config(**overrides):
    settings = dict(image_size=8, num_classes=4, style_dim=3, base_width=2, depth=2, spatn_blocks=1, disc_depth=2,
                    sean_hidden=3, sean_kernel=3)
    settings.update(overrides)
    return ModelConfig(**settings)


def _rng(tag):
    return np.random.default_rng(np.random.SeedSequence([2026, tag]))


def _projection(out, rng):
    """Scalar ``sum(out * r)`` for a fixed random ``r``."""
    return T.sum(out * Tensor(rng.standard_normal(out.shape)))


def _labels(rng, num_classes, shape):
    return SemanticMap(rng.integers(0, num_classes, size=shape), num_classes)


def _first_param(store, prefix):
    return next(name for name in store.names() if name.startswith(prefix))


def _gradients(f, params, coordinates=MIN_COORDINATES):
    report = grad_check(f, params, seed=0, coordinates=coordinates)
    return report.passed(), "max rel error %.2e over %i coordinates, %i skipped at kinks" % (
        report.max_error, len(report.table), sum(report.skipped.values()))


def _store(rng, **shapes):
    store = ParamStore(np.float64)
    for name in sorted(shapes):
        store.add(name, rng.standard_normal(shapes[name]))
    return store


@check(GRAD)
def elementwise_ops():
    rng = _rng(1)
    store = _store(rng, a=(2, 3, 4, 4), b=(1, 3, 1, 4))
    store["b"].data = np.abs(store["b"].data) + 0.5
    r = rng.standard_normal((2, 3, 4, 4))

    def f(p):
        a, b = p["a"], p["b"]
        out = T.tanh(a) * b + T.sigmoid(a) / b - T.exp(T.scale(a, 0.3)) + T.log(T.square(b) + 1.0)
        out = out + T.sqrt(T.absolute(a) + 1.0) + T.leaky_relu(a) + T.relu(a) + T.clip(a, -0.5, 0.5)
        return T.sum(out * Tensor(r))
    return _gradients(f, store)


@check(GRAD)
def reductions_and_reshapes():
    rng = _rng(2)
    store = _store(rng, x=(2, 4, 4, 4))
    r = rng.standard_normal((2, 5, 2, 2))

    def f(p):
        x = p["x"]
        shuffled = T.pixel_unshuffle(T.pixel_shuffle(x, 2) * 2.0, 2)
        pooled = T.avg_pool2d(shuffled, 2) + T.downsample_nearest(x, 2)
        stacked = T.concat([pooled, T.mean(pooled, axis=1, keepdims=True)])
        summed = T.sum(T.reshape(x, (2, 4, 16)), axis=2)
        upsampled = _projection(T.upsample_nearest(pooled, 2), _rng(20))
        return T.sum(stacked * Tensor(r)) + T.sum(summed * summed) + upsampled
    return _gradients(f, store)


@check(GRAD)
def convolutions():
    rng = _rng(3)
    store = _store(rng, x=(2, 3, 6, 6), w=(4, 3, 3, 3), b=(4,), wt=(4, 2, 3, 3), bt=(2,))

    def f(p):
        out = T.conv2d(p["x"], p["w"], p["b"], stride=2, pad=1)
        out = T.conv_transpose2d(out, p["wt"], p["bt"], stride=2, pad=1, output_pad=1)
        return _projection(out, _rng(30))
    return _gradients(f, store)


@check(GRAD)
def bilinear_sampling():
    rng = _rng(4)
    store = _store(rng, x=(2, 3, 6, 6), flow=(2, 2, 6, 6))
    store["flow"].data *= 1.7

    def f(p):
        return _projection(T.grid_sample_bilinear(p["x"], p["flow"]), _rng(40))
    return _gradients(f, store)


@check(GRAD)
def normalization_ops():
    rng = _rng(5)
    store = _store(rng, x=(2, 3, 4, 4), gamma=(1, 3, 1, 1), beta=(1, 3, 1, 1))
    mean = Tensor(np.zeros((1, 3, 1, 1)))
    var = Tensor(np.ones((1, 3, 1, 1)))

    def f(p):
        out = T.batch_norm(p["x"], p["gamma"], p["beta"], Tensor(mean.data.copy()), Tensor(var.data.copy()))
        return _projection(out + T.instance_norm(p["x"] * 3.0), _rng(50))
    return _gradients(f, store)


@check(GRAD)
def softmax_cross_entropy():
    rng = _rng(6)
    store = _store(rng, logits=(2, 4, 4, 4))
    truth = _labels(rng, 4, (2, 4, 4))

    def f(p):
        return cross_entropy(T.softmax(p["logits"]), truth)
    return _gradients(f, store)


@check(GRAD)
def region_pooling_and_broadcast():
    rng = _rng(7)
    store = _store(rng, features=(2, 3, 4, 4), soft=(2, 4, 4, 4))
    source = _labels(rng, 4, (2, 4, 4))

    def f(p):
        codes = region_average_pool(p["features"], source)
        return _projection(style_broadcast(codes, T.softmax(p["soft"])), _rng(70))
    return _gradients(f, store)


@check(GRAD)
def sean_layer():
    rng = _rng(8)
    store = _store(rng, h=(2, 3, 4, 4), style=(2, 2, 8, 8))
    params = SEANParams(store, "sean.", rng, 3, 4, 2, hidden=3)
    params.theta_alpha.data[...] = 0.3
    params.theta_beta.data[...] = -0.2
    layout = _labels(rng, 4, (2, 8, 8))

    def f(p):
        return _projection(params(p["h"], layout, p["style"]), _rng(80))
    return _gradients(f, store)


@check(GRAD)
def spade_layer():
    rng = _rng(16)
    store = _store(rng, h=(2, 3, 4, 4))
    params = SPADEParams(store, "spade.", rng, 3, 4, hidden=3)
    layout = _labels(rng, 4, (2, 8, 8))

    def f(p):
        return _projection(params(p["h"], layout), _rng(160))
    return _gradients(f, store)


@check(GRAD)
def spg_block():
    rng = _rng(9)
    config = _tiny_config()
    store = _store(rng, previous=(2, 2, 4, 4), appearance=(2, 2, 4, 4), pose=(2, 2, 4, 4), style=(2, 3, 8, 8))
    block = SPGBlock(store, "block.", rng, 2, config)
    layout = one_hot(_labels(rng, 4, (2, 8, 8)), np.float64)

    def f(p):
        return _projection(block(p["previous"], p["appearance"], p["pose"], layout, p["style"]), _rng(90))
    return _gradients(f, store)


@check(GRAD)
def feature_deformation():
    rng = _rng(10)
    store = _store(rng, features=(2, 2, 4, 4))
    warp = FeatureWarp(store, "warp.", rng, 2)
    flow = FlowField(rng.uniform(-1.5, 1.5, (2, 2, 8, 8)), rng.integers(0, 2, (2, 1, 8, 8)))

    def f(p):
        return _projection(warp(p["features"], flow), _rng(100))
    return _gradients(f, store)


@check(GRAD)
def pose_attention_block():
    rng = _rng(11)
    store = _store(rng, semantic=(2, 2, 4, 4), pose=(2, 2, 4, 4))
    block = PATBlock(store, "pat.", rng, 2)

    def f(p):
        semantic, pose = block(p["semantic"], p["pose"])
        return _projection(semantic, _rng(110)) + _projection(pose, _rng(111))
    return _gradients(f, store)


@check(GRAD)
def spatn_network():
    rng = _rng(12)
    model = SPATNModel(_tiny_config(), dtype=np.float64)
    source_pose, target_pose = rng.random((2, POSE_CHANNELS, 8, 8)), rng.random((2, POSE_CHANNELS, 8, 8))
    source, truth = _labels(rng, 4, (2, 8, 8)), _labels(rng, 4, (2, 8, 8))

    def f(p):
        return cross_entropy(spatn_forward(model, source_pose, target_pose, source), truth)
    return _gradients(f, model.store)


@check(GRAD)
def discriminator_network():
    rng = _rng(13)
    model = Discriminator(_tiny_config(), dtype=np.float64)
    real, fake, source = (rng.random((2, 3, 8, 8)) for _ in range(3))
    pose = rng.random((2, POSE_CHANNELS, 8, 8))

    def f(p):
        return discriminator_loss(model(real, source, pose), model(fake, source, pose))
    return _gradients(f, model.store)


@check(GRAD)
def perceptual_objective():
    rng = _rng(14)
    store = _store(rng, image=(1, 3, 8, 8))
    extractor = FeatureExtractor(seed=0, dtype=np.float64)
    target = Tensor(rng.random((1, 3, 8, 8)))

    def f(p):
        return perceptual_loss(T.sigmoid(p["image"]), target, extractor)
    return _gradients(f, store)


@check(GRAD)
def generator_objective():
    rng = _rng(15)
    config = _tiny_config(image_size=16)
    generator = SPGNetModel(config, dtype=np.float64)
    discriminator = Discriminator(config, dtype=np.float64)
    extractor = FeatureExtractor(seed=0, dtype=np.float64)
    source_image, target_image = Tensor(rng.random((1, 3, 16, 16))), Tensor(rng.random((1, 3, 16, 16)))
    target_pose = Tensor(rng.random((1, POSE_CHANNELS, 16, 16)))
    source_map, target_map = _labels(rng, 4, (1, 16, 16)), _labels(rng, 4, (1, 16, 16))
    flow = FlowField(rng.uniform(-1.5, 1.5, (1, 2, 16, 16)), rng.integers(0, 2, (1, 1, 16, 16)))
    weights = LossWeights()
    params = OrderedDict((prefix, generator.store[_first_param(generator.store, prefix)])
                         for prefix in GENERATOR_GROUPS)

    def f(p):
        fake = generator(target_pose, source_image, source_map, target_map, flow)
        return full_objective({"l1": l1_loss(fake, target_image),
                               "perc": perceptual_loss(fake, target_image, extractor),
                               "adv": generator_loss(discriminator(fake, source_image, target_pose))}, weights)
    return _gradients(f, params, coordinates=GENERATOR_COORDINATES)


# Invariant suite


@check(INVARIANTS)
def normalization_statistics():
    rng = _rng(20)
    h = Tensor(rng.standard_normal((2, 4, 8, 8)) * 3.0 + 2.0)
    out = normalize(h).data
    mean_error = float(np.abs(out.mean(axis=(2, 3))).max())
    std_error = float(np.abs(out.std(axis=(2, 3)) - 1).max())
    return mean_error <= 1e-4 and std_error <= 1e-3, "max |mean| %.1e, max |std - 1| %.1e" % (mean_error, std_error)


def _sean_fixture(kernel):
    rng = _rng(21)
    store = ParamStore(np.float64)
    params = SEANParams(store, "sean.", rng, 3, 4, 2, hidden=3, kernel=kernel)
    h = Tensor(rng.standard_normal((1, 3, 8, 8)))
    labels = SemanticMap(np.repeat(np.arange(4), 16).reshape(8, 8), 4)
    codes = rng.standard_normal((1, 4, 2))
    return rng, params, h, labels, codes


@check(INVARIANTS)
def sean_region_locality():
    rng, params, h, labels, codes = _sean_fixture(kernel=1)
    region = 2
    changed = codes.copy()
    changed[0, region] += rng.standard_normal(2)
    present = np.ones((1, 4), dtype=bool)
    before = params(h, labels, style_broadcast(StyleCodes(Tensor(codes), present), labels)).data
    after = params(h, labels, style_broadcast(StyleCodes(Tensor(changed), present), labels)).data
    outside = np.broadcast_to(labels.labels[:, None] != region, before.shape)
    unchanged = np.array_equal(before[outside], after[outside])
    moved = not np.array_equal(before[~outside], after[~outside])
    return unchanged and moved, "outside region bit-identical: %s, inside changed: %s" % (unchanged, moved)


@check(INVARIANTS)
def sean_blend_endpoints():
    _, params, h, labels, codes = _sean_fixture(kernel=3)
    style = style_broadcast(StyleCodes(Tensor(codes), np.ones((1, 4), dtype=bool)), labels)

    params.theta_alpha.data[...] = params.theta_beta.data[...] = 50.0
    semantic_only = np.abs(params(h, labels, style).data - spade_variant(h, labels, params).data).max()

    params.theta_alpha.data[...] = params.theta_beta.data[...] = -50.0
    alpha_c, beta_c = params.style(style)
    expected = (alpha_c * normalize(h) + beta_c).data
    style_only = np.abs(params(h, labels, style).data - expected).max()
    return semantic_only < 1e-9 and style_only < 1e-9, \
        "semantic endpoint off by %.1e, style endpoint off by %.1e" % (semantic_only, style_only)


@check(INVARIANTS)
def zero_flow_identity():
    x = Tensor(_rng(22).standard_normal((2, 3, 6, 6)))
    out = T.grid_sample_bilinear(x, Tensor(np.zeros((2, 2, 6, 6)))).data
    return np.array_equal(out, x.data), "zero flow reproduces the input exactly"


@check(INVARIANTS)
def integer_shift():
    x = _rng(23).standard_normal((1, 2, 5, 6))
    flow = np.zeros((1, 2, 5, 6))
    flow[:, 0] = 1.0
    flow[:, 1] = -1.0
    out = T.grid_sample_bilinear(Tensor(x), Tensor(flow)).data
    expected = np.zeros_like(x)
    expected[:, :, 1:, :-1] = x[:, :, :-1, 1:]
    return np.array_equal(out, expected), "shift by (+1, -1) exact with zero border fill"


@check(INVARIANTS)
def visibility_gate_partition():
    rng = _rng(24)
    warped = rng.standard_normal((2, 3, 4, 4))
    vis = rng.integers(0, 2, (2, 1, 4, 4)).astype(np.float64)
    visible, invisible = gate(Tensor(warped), Tensor(vis))
    return np.array_equal((visible + invisible).data, warped), "visible + invisible branches equal the warp"


@check(INVARIANTS)
def constant_region_pooling():
    labels = SemanticMap(np.repeat(np.arange(4), 16).reshape(1, 8, 8), 4)
    values = np.array([0.25, -1.5, 3.0, 0.75])
    features = np.broadcast_to(values[labels.labels][:, None], (1, 2, 8, 8)).copy()
    codes = region_average_pool(Tensor(features), labels).to_array()
    return np.array_equal(codes, np.stack([values, values], axis=1)), "constant regions pool to their value"


@check(INVARIANTS)
def broadcast_piecewise_constant():
    rng = _rng(25)
    labels = _labels(rng, 5, (2, 6, 6))
    codes = rng.standard_normal((2, 5, 3))
    out = style_broadcast(StyleCodes(Tensor(codes), np.ones((2, 5), dtype=bool)), labels).data
    expected = np.stack([codes[n][labels.labels[n]].transpose(2, 0, 1) for n in range(2)])
    return np.array_equal(out, expected), "each pixel carries exactly the code of its label"


@check(INVARIANTS)
def pixel_shuffle_inverse():
    x = _rng(26).standard_normal((2, 8, 3, 3))
    round_trip = T.pixel_unshuffle(T.pixel_shuffle(Tensor(x), 2), 2).data
    return np.array_equal(round_trip, x), "unshuffle inverts shuffle"


@check(INVARIANTS)
def metric_symmetries():
    rng = _rng(27)
    a, b = rng.random((2, 3, 16, 16)), rng.random((2, 3, 16, 16))
    symmetric = abs(ssim(a, b) - ssim(b, a)) <= 1e-9
    truth, pred = rng.integers(0, 5, (1, 8, 8)), rng.integers(0, 5, (1, 8, 8))
    order = rng.permutation(64)
    permuted = miou(pred.reshape(1, -1)[:, order], truth.reshape(1, -1)[:, order], 5) == miou(pred, truth, 5)
    mask = np.zeros((2, 1, 16, 16))
    mask[:, :, 4:12, 4:12] = 1
    changed = b + (1 - mask) * rng.random(b.shape)
    masked = masked_ssim(a, changed, mask) == masked_ssim(a, b, mask)
    return symmetric and permuted and masked, "ssim symmetric: %s, miou permutation-invariant: %s, " \
        "masked ssim blind outside the mask: %s" % (symmetric, permuted, masked)


# Oracle suite


def _brute_force_distance(point, start, end):
    """Two-level dense sampling of the segment."""
    start, end = np.asarray(start), np.asarray(end)
    coarse = np.linspace(0.0, 1.0, 1001)
    samples = start + coarse[:, None] * (end - start)
    best = int(np.argmin(np.hypot(*(samples - point).T)))
    fine = np.linspace(coarse[max(best - 1, 0)], coarse[min(best + 1, 1000)], 2001)
    samples = start + fine[:, None] * (end - start)
    return float(np.hypot(*(samples - point).T).min())


@check(ORACLE)
def segment_distance_brute_force():
    rng = _rng(30)
    worst = 0.0
    for _ in range(DISTANCE_ORACLE_CASES):
        start, end, point = rng.uniform(0, 64, 2), rng.uniform(0, 64, 2), rng.uniform(-8, 72, 2)
        exact = float(segment_distance(np.array(point[0]), np.array(point[1]), start, end))
        worst = max(worst, abs(exact - _brute_force_distance(point, start, end)))
    return worst <= DISTANCE_ORACLE_TOLERANCE, "max deviation %.1e over %i cases" % (worst, DISTANCE_ORACLE_CASES)


@check(ORACLE)
def distance_map_values():
    coords = np.zeros((NUM_JOINTS, 2))
    visible = np.zeros(NUM_JOINTS, dtype=bool)
    coords[1], coords[2] = (5.0, 20.0), (25.0, 20.0)
    visible[[1, 2]] = True
    maps = distance_map(Keypoints(coords, visible), LimbSet(), 32, 32, KAPPA).data
    on_limb = float(maps[0, 0, 20, 15])
    ten_away = float(maps[0, 0, 30, 15])
    invisible = not maps[0, 1:].any()
    passed = abs(on_limb - 1.0) <= 1e-6 and abs(ten_away - np.exp(-1.0)) <= 1e-6 and invisible
    return passed, "d=0 -> %.6f, d=10 -> %.6f, limbs with a hidden joint zero: %s" % (on_limb, ten_away, invisible)


@check(ORACLE)
def synthetic_flow_consistency():
    worst = 0.0
    for sample in synth_dataset(8, 32, 8, seed=3, pairs_per_identity=2, crossed_fraction=0.5):
        warped = T.grid_sample_bilinear(sample.source_image, sample.flow.phi).data
        vis = sample.flow.vis.data[:, 0].astype(bool)
        if vis.any():
            error = np.abs(warped - sample.target_image.data).transpose(0, 2, 3, 1)[vis].mean()
            worst = max(worst, float(error))
    return worst <= FLOW_MAE_BOUND, "worst visible-pixel MAE %.4f" % worst


@check(ORACLE)
def synthetic_label_coverage():
    classes = 8
    histogram = np.zeros(classes, dtype=np.int64)
    for sample in synth_dataset(100, 32, classes, seed=4):
        histogram += sample.target_map.histogram()
    return bool(np.all(histogram > 0)), "pixels per class %s" % histogram.tolist()


@check(ORACLE)
def ssim_closed_forms():
    rng = _rng(31)
    x = rng.random((1, 3, 16, 16))
    identical = abs(ssim(x, x) - 1.0) <= 1e-9
    mu1, mu2 = 0.3, 0.7
    c1 = 0.01 ** 2
    expected = (2 * mu1 * mu2 + c1) / (mu1 ** 2 + mu2 ** 2 + c1)
    constant = ssim(np.full((1, 3, 16, 16), mu1), np.full((1, 3, 16, 16), mu2))
    return identical and abs(constant - expected) <= 1e-6, \
        "ssim(x, x) = 1: %s, constant images %.6f vs %.6f" % (identical, constant, expected)


@check(ORACLE)
def miou_counting():
    truth = np.zeros((1, 4, 4), dtype=int)
    truth[..., 2:] = 1
    pred = np.zeros((1, 4, 4), dtype=int)
    pred[..., 3:] = 1
    scores = []
    for label in (0, 1):
        intersection = union = 0
        for t, p in zip(truth.ravel(), pred.ravel()):
            intersection += int(t == label and p == label)
            union += int(t == label or p == label)
        scores.append(intersection / float(union))
    expected = sum(scores) / 2.0
    value = miou(pred, truth, 2)
    return abs(value - expected) <= 1e-12, "mIOU %.6f, counted %.6f" % (value, expected)


@check(ORACLE)
def objective_arithmetic():
    value = full_objective({"ce": 0.1, "l1": 0.2, "perc": 0.3, "adv": 0.4}, LossWeights()).item()
    return abs(value - 1.504) <= 1e-6, "weighted objective %.6f" % value


# Scale suite


@check(SCALE)
def full_scale_forward():
    config = ModelConfig.full_scale()
    model = SPGNetModel(config).eval()
    rng = _rng(40)
    size = config.image_size
    image = Tensor(rng.random((1, 3, size, size)).astype(np.float32))
    parsing = _labels(rng, config.num_classes, (1, size, size))
    pose = Tensor(rng.random((1, POSE_CHANNELS, size, size)).astype(np.float32))
    out = model(pose, image, parsing, parsing, FlowField.identity(1, size, size))
    return out.shape == (1, 3, size, size), "output dims %s, %i parameters" % (out.shape, model.store.count())

