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
Training loops for both stages and the scheme and ablation protocols.

Stage one (SPATN) minimizes the parsing cross-entropy. Stage two trains the generator with the weighted L1,
perceptual and adversarial losses under one of three schemes:

* ``seq``: a pretrained, frozen SPATN feeds its argmax parsing to the generator;
* ``joint``: SPATN and generator train together, the generator sees SPATN's softmax probabilities and the
  whole objective (cross-entropy included) flows into both;
* ``parallel``: the generator trains on ground-truth parsing while SPATN trains on its own loss; predicted
  parsing is used only for validation and inference.
"""

import logging
import os

import numpy as np
from pandas import DataFrame

from .config import sidecar_path
from .exceptions import ConfigError, NonFiniteError
from .losses import FeatureExtractor, LossWeights, discriminator_loss, full_objective, generator_loss, l1_loss, \
    perceptual_loss
from .metrics import miou, pixel_accuracy, ssim
from .models import Discriminator, ModelConfig, SPATNModel, SPGNetModel
from .optim import Adam, PlateauSchedule
from .pose import build_pose_tensor
from .semantics import SemanticMap, cross_entropy
from .synth import read_dataset, split_by_identity, synth_dataset
from .deform import FlowField
from .tensor import ComputationTape, Tensor, as_tensor


LOGGER = logging.getLogger(__name__)


SEQUENTIAL = "seq"
JOINT = "joint"
PARALLEL = "parallel"
SCHEMES = (SEQUENTIAL, JOINT, PARALLEL)

METRIC_COLUMNS = ["iter", "loss_ce", "loss_l1", "loss_perc", "loss_adv", "val_l1", "val_ssim", "val_miou", "lr"]
ABLATION_CROSSED_FRACTION = 0.5

SPATN_CHECKPOINT = "spatn.ckpt"
SPGNET_CHECKPOINT = "spgnet.ckpt"
DISCRIMINATOR_CHECKPOINT = "disc.ckpt"
METRICS_FILE = "metrics.csv"


class Batch(object):
    """Collated samples: pose tensors, images, label maps and flows stacked along the batch axis."""

    def __init__(self, source_pose, target_pose, source_image, target_image, source_map, target_map, flow):
        self.source_pose = source_pose
        self.target_pose = target_pose
        self.source_image = source_image
        self.target_image = target_image
        self.source_map = source_map
        self.target_map = target_map
        self.flow = flow

    def __len__(self):
        return self.source_image.shape[0]


def pose_tensor(keypoints, config):
    size = config["image_size"]
    return build_pose_tensor(keypoints, None, size, size, sigma=config["heatmap_sigma"] or None,
                             kappa=config["kappa"], distance_maps=config["distance_maps"])


def collate(samples, config):
    def stack(tensors):
        return Tensor(np.concatenate([t.data for t in tensors]))

    return Batch(stack([pose_tensor(s.source_keypoints, config) for s in samples]),
                 stack([pose_tensor(s.target_keypoints, config) for s in samples]),
                 stack([s.source_image for s in samples]),
                 stack([s.target_image for s in samples]),
                 SemanticMap.stack([s.source_map for s in samples]),
                 SemanticMap.stack([s.target_map for s in samples]),
                 FlowField.stack([s.flow for s in samples]))


def iterate_batches(samples, batch_size, rng):
    """Endless batches, reshuffled every epoch; a short dataset yields one batch of everything."""
    size = min(batch_size, len(samples))
    while True:
        order = rng.permutation(len(samples))
        for start in range(0, len(order) - size + 1, size):
            yield [samples[i] for i in order[start:start + size]]


def fixed_batches(samples, batch_size, config):
    return [collate(samples[start:start + batch_size], config) for start in range(0, len(samples), batch_size)]


def load_samples(config):
    """
    The run's dataset: read from ``data_dir`` when set, generated otherwise.

    Raises
    ------
    ConfigError
        If a stored dataset does not match the configured size or class count.
    """
    if config["data_dir"]:
        samples = read_dataset(config["data_dir"])
        if samples and (samples[0].size != config["image_size"] or samples[0].num_classes != config["num_classes"]):
            raise ConfigError("dataset in %s is %ix%i with %i classes, config asks for %ix%i with %i"
                              % (config["data_dir"], samples[0].size, samples[0].size, samples[0].num_classes,
                                 config["image_size"], config["image_size"], config["num_classes"]))
        return samples
    return synth_dataset(config["dataset_size"], config["image_size"], config["num_classes"], config["seed"],
                         config["pairs_per_identity"], config["crossed_fraction"])


def _finite(value, name):
    if not np.isfinite(value):
        raise NonFiniteError(name, "%s diverged (value %r)" % (name, value))
    return value


def _history(rows):
    return DataFrame(rows, columns=METRIC_COLUMNS + ["val_acc"])


def save_model(model, config, path):
    """Write a checkpoint and its resolved-config sidecar."""
    model.save(path)
    config.write(sidecar_path(path))


def write_metrics(history, path):
    history.to_csv(path, columns=METRIC_COLUMNS, index=False)
    LOGGER.info("Wrote metrics to %s", path)


def _is_validation_round(iteration, total, every):
    return iteration % every == 0 or iteration == total


# Stage one


def spatn_source(batch, config):
    return batch.source_map if config["spatn_input"] == "parsing" else batch.source_image


def evaluate_spatn(model, batches, config):
    """
    Held-out parsing quality.

    Returns
    -------
    (float, float)
        Pixel accuracy and mIOU over all validation pixels.
    """
    was_training = model.store.training
    model.eval()
    predicted, truth = [], []
    for batch in batches:
        probabilities = model(batch.source_pose, batch.target_pose, spatn_source(batch, config))
        predicted.append(SemanticMap.from_probabilities(probabilities))
        truth.append(batch.target_map)
    if was_training:
        model.train()
    predicted, truth = SemanticMap.stack(predicted), SemanticMap.stack(truth)
    return pixel_accuracy(predicted, truth), miou(predicted, truth)


class Stage1Result(object):

    def __init__(self, model, history, config):
        self.model = model
        self.history = history
        self.config = config

    @property
    def final(self):
        rows = self.history.dropna(subset=["val_miou"])
        return rows.iloc[-1] if len(rows) else None


def train_stage1(config, samples=None, out_dir=None):
    """
    Train SPATN on the parsing cross-entropy.

    Parameters
    ----------
    config : RunConfig
    samples : list of SyntheticSample, optional
        Defaults to :func:`load_samples`.
    out_dir : str, optional
        Where to write ``spatn.ckpt`` (with sidecar) and ``metrics.csv``.

    Returns
    -------
    Stage1Result

    Raises
    ------
    NonFiniteError
        If the loss or a gradient diverges.
    """
    config.validate()
    config.log()
    if samples is None:
        samples = load_samples(config)
    train_set, val_set = split_by_identity(samples, config["val_fraction"])
    model = SPATNModel(ModelConfig.from_config(config))
    adam = Adam(model.store, config["lr"])
    rng = np.random.default_rng(np.random.SeedSequence([config["seed"], 11]))
    batches = iterate_batches(train_set, config["batch_size"], rng)
    validation = fixed_batches(val_set, config["batch_size"], config)
    total = config["stage1_iterations"]
    LOGGER.info("Training SPATN for %i iterations on %i pairs (%i held out)", total, len(train_set), len(val_set))

    rows = []
    for iteration in range(1, total + 1):
        batch = collate(next(batches), config)
        model.store.zero_grad()
        with ComputationTape() as tape:
            probabilities = model(batch.source_pose, batch.target_pose, spatn_source(batch, config))
            loss_ce = cross_entropy(probabilities, batch.target_map)
            loss = loss_ce * config["lambda_ce"]
        _finite(loss_ce.item(), "loss_ce")
        tape.backward(loss)
        adam.step()
        LOGGER.debug("iter %i loss_ce %.5f", iteration, loss_ce.item())

        row = {"iter": iteration, "loss_ce": loss_ce.item(), "lr": adam.lr}
        if _is_validation_round(iteration, total, config["val_every"]):
            accuracy, score = evaluate_spatn(model, validation, config)
            row.update(val_acc=accuracy, val_miou=score)
            LOGGER.info("SPATN iter %i: loss_ce %.4f, val pixel accuracy %.4f, val mIOU %.4f",
                        iteration, loss_ce.item(), accuracy, score)
        rows.append(row)

    result = Stage1Result(model, _history(rows), config)
    if out_dir:
        save_model(model, config, os.path.join(out_dir, SPATN_CHECKPOINT))
        write_metrics(result.history, os.path.join(out_dir, METRICS_FILE))
    return result


# Stage two


class Stage2Trainer(object):
    """
    Alternating generator and discriminator Adam steps under one training scheme.

    Attributes
    ----------
    spatn, generator, discriminator : Model
    scheme : str
        One of "seq", "joint", "parallel".
    """

    def __init__(self, config, scheme, spatn=None):
        if scheme not in SCHEMES:
            raise ConfigError("scheme must be one of %s, got %r" % (", ".join(SCHEMES), scheme))
        self.config = config
        self.scheme = scheme
        model_config = ModelConfig.from_config(config)
        self.spatn = spatn if spatn is not None else SPATNModel(model_config)
        self.generator = SPGNetModel(model_config)
        self.discriminator = Discriminator(model_config)
        self.extractor = FeatureExtractor(config["seed"])
        self.weights = LossWeights.from_config(config)
        self.schedule = PlateauSchedule(config["patience"])
        self.generator_adam = Adam(self.generator.store, config["lr"])
        self.discriminator_adam = Adam(self.discriminator.store, config["lr_disc"])
        self.spatn_adam = Adam(self.spatn.store, config["lr"]) if self.trains_spatn else None
        if not self.trains_spatn:
            self.spatn.eval()

    @property
    def trains_spatn(self):
        return self.scheme != SEQUENTIAL

    @property
    def adversarial(self):
        return self.weights.adv > 0

    def _zero_grad(self):
        for model in (self.spatn, self.generator, self.discriminator):
            model.store.zero_grad()

    def generator_step(self, batch):
        """One update of the generator (and SPATN unless frozen); returns the unweighted loss parts."""
        source = spatn_source(batch, self.config)
        self._zero_grad()
        if self.scheme == SEQUENTIAL:
            target = SemanticMap.from_probabilities(self.spatn(batch.source_pose, batch.target_pose, source))
        with ComputationTape() as tape:
            parts = {}
            if self.scheme != SEQUENTIAL:
                probabilities = self.spatn(batch.source_pose, batch.target_pose, source)
                parts["ce"] = cross_entropy(probabilities, batch.target_map)
                target = batch.target_map if self.scheme == PARALLEL else probabilities
            fake = self.generator(batch.target_pose, batch.source_image, batch.source_map, target, batch.flow)
            parts["l1"] = l1_loss(fake, batch.target_image)
            parts["perc"] = perceptual_loss(fake, batch.target_image, self.extractor)
            if self.adversarial:
                parts["adv"] = generator_loss(self.discriminator(fake, batch.source_image, batch.target_pose))
            else:
                parts["adv"] = as_tensor(0.0)
            objective = full_objective(parts, self.weights)
        tape.backward(objective)
        self.generator_adam.step()
        if self.trains_spatn:
            self.spatn_adam.step()
        return {name: _finite(value.item(), "loss_" + name) for name, value in parts.items()}, fake.detach()

    def discriminator_step(self, batch, fake):
        self.discriminator.store.zero_grad()
        with ComputationTape() as tape:
            real_logits = self.discriminator(batch.target_image, batch.source_image, batch.target_pose)
            fake_logits = self.discriminator(fake, batch.source_image, batch.target_pose)
            loss = discriminator_loss(real_logits, fake_logits)
        _finite(loss.item(), "loss_disc")
        tape.backward(loss)
        self.discriminator_adam.step()
        return loss.item()

    def step(self, batch):
        parts, fake = self.generator_step(batch)
        if self.adversarial:
            parts["disc"] = self.discriminator_step(batch, fake)
        return parts

    def evaluate(self, batches):
        """
        Held-out L1, SSIM and parsing mIOU with SPATN predictions in place of ground-truth parsing.

        Returns
        -------
        (float, float, float)
        """
        models = (self.spatn, self.generator)
        modes = [m.store.training for m in models]
        for model in models:
            model.eval()
        l1, similarity, predicted, truth = [], [], [], []
        for batch in batches:
            probabilities = self.spatn(batch.source_pose, batch.target_pose, spatn_source(batch, self.config))
            labels = SemanticMap.from_probabilities(probabilities)
            target = probabilities if self.scheme == JOINT else labels
            fake = self.generator(batch.target_pose, batch.source_image, batch.source_map, target, batch.flow)
            l1.append(l1_loss(fake, batch.target_image).item() * len(batch))
            similarity.append(ssim(fake, batch.target_image) * len(batch))
            predicted.append(labels)
            truth.append(batch.target_map)
        for model, mode in zip(models, modes):
            model.store.training = mode
        count = float(sum(len(b) for b in batches))
        return sum(l1) / count, sum(similarity) / count, miou(SemanticMap.stack(predicted), SemanticMap.stack(truth))

    def adjust_learning_rate(self, val_l1):
        multiplier = self.schedule.update(val_l1)
        self.generator_adam.lr = self.config["lr"] * multiplier
        self.discriminator_adam.lr = self.config["lr_disc"] * multiplier
        if self.spatn_adam is not None:
            self.spatn_adam.lr = self.config["lr"] * multiplier

    def save(self, out_dir):
        save_model(self.spatn, self.config, os.path.join(out_dir, SPATN_CHECKPOINT))
        save_model(self.generator, self.config, os.path.join(out_dir, SPGNET_CHECKPOINT))
        save_model(self.discriminator, self.config, os.path.join(out_dir, DISCRIMINATOR_CHECKPOINT))


class Stage2Result(object):

    def __init__(self, trainer, history):
        self.trainer = trainer
        self.history = history

    @property
    def scheme(self):
        return self.trainer.scheme

    @property
    def generator(self):
        return self.trainer.generator

    @property
    def spatn(self):
        return self.trainer.spatn

    @property
    def final(self):
        rows = self.history.dropna(subset=["val_l1"])
        return rows.iloc[-1] if len(rows) else None


def train_stage2(config, scheme=PARALLEL, samples=None, out_dir=None, spatn=None):
    """
    Train the generator (and, depending on the scheme, SPATN).

    Parameters
    ----------
    config : RunConfig
    scheme : str
        "seq", "joint" or "parallel".
    samples : list of SyntheticSample, optional
    out_dir : str, optional
        Where to write the three checkpoints and ``metrics.csv``.
    spatn : SPATNModel, optional
        Pretrained stage one for the sequential scheme; trained first when omitted.

    Returns
    -------
    Stage2Result

    Raises
    ------
    ConfigError
        On an unknown scheme.
    NonFiniteError
        If a loss or gradient diverges.
    """
    if scheme not in SCHEMES:
        raise ConfigError("scheme must be one of %s, got %r" % (", ".join(SCHEMES), scheme))
    config.validate()
    config.log()
    if samples is None:
        samples = load_samples(config)
    if scheme == SEQUENTIAL and spatn is None:
        LOGGER.info("Pretraining SPATN for the sequential scheme")
        spatn = train_stage1(config, samples).model
    trainer = Stage2Trainer(config, scheme, spatn)
    train_set, val_set = split_by_identity(samples, config["val_fraction"])
    rng = np.random.default_rng(np.random.SeedSequence([config["seed"], 12]))
    batches = iterate_batches(train_set, config["batch_size"], rng)
    validation = fixed_batches(val_set, config["batch_size"], config)
    total = config["iterations"]
    LOGGER.info("Training SPGNet (%s scheme) for %i iterations", scheme, total)

    rows = []
    for iteration in range(1, total + 1):
        parts = trainer.step(collate(next(batches), config))
        LOGGER.debug("iter %i %s", iteration, " ".join("%s %.5f" % item for item in sorted(parts.items())))
        row = {"iter": iteration, "loss_ce": parts.get("ce", np.nan), "loss_l1": parts["l1"],
               "loss_perc": parts["perc"], "loss_adv": parts["adv"], "lr": trainer.generator_adam.lr}
        if _is_validation_round(iteration, total, config["val_every"]):
            val_l1, val_ssim, val_miou = trainer.evaluate(validation)
            row.update(val_l1=val_l1, val_ssim=val_ssim, val_miou=val_miou)
            LOGGER.info("SPGNet iter %i: l1 %.4f perc %.4f, val l1 %.4f, val ssim %.4f, val mIOU %.4f",
                        iteration, parts["l1"], parts["perc"], val_l1, val_ssim, val_miou)
            trainer.adjust_learning_rate(val_l1)
        rows.append(row)

    result = Stage2Result(trainer, _history(rows))
    if out_dir:
        trainer.save(out_dir)
        write_metrics(result.history, os.path.join(out_dir, METRICS_FILE))
    return result


# Protocols


def _final_value(row, column):
    return np.nan if row is None else float(row[column])


def run_schemes(config, samples=None, out_dir=None, schemes=SCHEMES):
    """
    Train stage two under each scheme on the same data.

    Returns
    -------
    DataFrame
        scheme, val_l1, val_ssim, val_miou of the last validation round; also written to ``schemes.csv``.
    """
    if samples is None:
        samples = load_samples(config)
    rows = []
    for scheme in schemes:
        scheme_dir = os.path.join(out_dir, scheme) if out_dir else None
        final = train_stage2(config, scheme, samples, scheme_dir).final
        rows.append((scheme, _final_value(final, "val_l1"), _final_value(final, "val_ssim"),
                     _final_value(final, "val_miou")))
    table = DataFrame(rows, columns=["scheme", "val_l1", "val_ssim", "val_miou"])
    LOGGER.info("Scheme comparison:\n%s", table.to_string(index=False))
    if out_dir:
        table.to_csv(os.path.join(out_dir, "schemes.csv"), index=False)
    return table


def run_distance_map_ablation(config, samples=None, out_dir=None):
    """
    Train stage one with and without the skeleton distance-map channels on crossed-arm-heavy data.

    Returns
    -------
    DataFrame
        distance_maps, val_acc, val_miou, best; also written to ``ablation.csv``.
    """
    config = config.copy(crossed_fraction=max(config["crossed_fraction"], ABLATION_CROSSED_FRACTION))
    if samples is None:
        samples = load_samples(config)
    rows = []
    for enabled in (True, False):
        run_config = config.copy(distance_maps=enabled)
        run_dir = os.path.join(out_dir, "distance_maps" if enabled else "heatmaps_only") if out_dir else None
        final = train_stage1(run_config, samples, run_dir).final
        rows.append((enabled, _final_value(final, "val_acc"), _final_value(final, "val_miou")))
    table = DataFrame(rows, columns=["distance_maps", "val_acc", "val_miou"])
    table["best"] = table["val_miou"] == table["val_miou"].max()
    LOGGER.info("Distance-map ablation:\n%s", table.to_string(index=False))
    if out_dir:
        table.to_csv(os.path.join(out_dir, "ablation.csv"), index=False)
    return table


def transfer(spatn, generator, config, source_image, source_map, source_keypoints, target_keypoints, flow):
    """
    End-to-end inference: predict the target parsing, then render the target image.

    Returns
    -------
    (Tensor, SemanticMap)
        The (1, 3, H, W) image and the predicted target parsing.
    """
    spatn.eval()
    generator.eval()
    source_pose = pose_tensor(source_keypoints, config)
    target_pose = pose_tensor(target_keypoints, config)
    source = source_map if config["spatn_input"] == "parsing" else source_image
    probabilities = spatn(source_pose, target_pose, source)
    predicted = SemanticMap.from_probabilities(probabilities)
    image = generator(target_pose, source_image, source_map, predicted, flow)
    return image, predicted
