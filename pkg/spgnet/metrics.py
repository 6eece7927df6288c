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
"""Image and parsing quality metrics: SSIM, foreground-masked SSIM, mIOU and pixel accuracy."""

import glob
import logging
import os

import numpy as np
from pandas import DataFrame
from skimage.metrics import structural_similarity

from .exceptions import FormatError, ShapeError, ValidationError
from .io import read_pgm, read_ppm
from .semantics import SemanticMap
from .tensor import Tensor


LOGGER = logging.getLogger(__name__)


SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DATA_RANGE = 1.0
# gaussian window of sigma 1.5 truncated at 3.5 sigma
SSIM_WINDOW = 11

METRICS = ("ssim", "mssim", "miou")


def _array(image):
    data = image.data if isinstance(image, Tensor) else np.asarray(image)
    if data.ndim == 3:
        data = data[None]
    return np.asarray(data, dtype=np.float64)


def ssim(a, b):
    """
    Mean structural similarity of two image batches.

    Local statistics use an 11x11 Gaussian window (sigma 1.5) with K1=0.01, K2=0.03 and dynamic range 1; SSIM
    is computed per channel and averaged over channels, pixels and the batch.

    Parameters
    ----------
    a, b : Tensor or numpy.ndarray
        (n, c, H, W) or (c, H, W) images in [0, 1].

    Returns
    -------
    float

    Raises
    ------
    ShapeError
        If the dims differ or an image is smaller than the window.
    """
    a, b = _array(a), _array(b)
    if a.shape != b.shape:
        raise ShapeError("ssim needs equal dims, got %s and %s" % (a.shape, b.shape))
    if min(a.shape[2:]) < SSIM_WINDOW:
        raise ShapeError("ssim needs images of at least %ix%i, got %s" % (SSIM_WINDOW, SSIM_WINDOW, a.shape))
    scores = [structural_similarity(x.transpose(1, 2, 0), y.transpose(1, 2, 0), channel_axis=-1,
                                    data_range=DATA_RANGE, gaussian_weights=True, sigma=SSIM_SIGMA,
                                    use_sample_covariance=False, K1=SSIM_K1, K2=SSIM_K2)
              for x, y in zip(a, b)]
    return float(np.mean(scores))


def foreground_mask(mask):
    """(n, 1, H, W) float mask from a SemanticMap (non-background labels) or a binary array."""
    if isinstance(mask, SemanticMap):
        return mask.foreground().astype(np.float64)
    mask = _array(mask)
    if not np.all((mask == 0) | (mask == 1)):
        raise ValidationError("mask must be binary")
    return mask


def masked_ssim(a, b, mask):
    """
    SSIM after zeroing everything outside the foreground mask in both images.

    An all-zero mask compares two black images and scores 1.
    """
    a, b = _array(a), _array(b)
    mask = foreground_mask(mask)
    if mask.shape[0] != a.shape[0] or mask.shape[2:] != a.shape[2:]:
        raise ShapeError("mask %s does not cover images %s" % (mask.shape, a.shape))
    return ssim(a * mask, b * mask)


def _labels(semantic, num_classes):
    if isinstance(semantic, SemanticMap):
        labels = semantic.labels
    else:
        labels = np.asarray(semantic)
    if labels.size and labels.max() >= num_classes:
        raise ValidationError("label %i outside [0, %i)" % (labels.max(), num_classes))
    return labels


def miou(pred, truth, num_classes=None):
    """
    Mean intersection over union across classes.

    Classes absent from both maps are skipped.

    Raises
    ------
    ValidationError
        If a label is not below ``num_classes``.
    ShapeError
        If the maps differ in dims.
    """
    if num_classes is None:
        num_classes = truth.num_classes
    pred, truth = _labels(pred, num_classes), _labels(truth, num_classes)
    if pred.shape != truth.shape:
        raise ShapeError("label maps differ in dims: %s and %s" % (pred.shape, truth.shape))
    pred, truth = pred.ravel().astype(np.int64), truth.ravel().astype(np.int64)
    confusion = np.bincount(truth * num_classes + pred, minlength=num_classes ** 2).reshape(num_classes,
                                                                                          num_classes)
    intersection = np.diag(confusion)
    union = confusion.sum(axis=0) + confusion.sum(axis=1) - intersection
    present = union > 0
    if not present.any():
        return 1.0
    return float(np.mean(intersection[present] / union[present]))


def pixel_accuracy(pred, truth):
    num_classes = truth.num_classes if isinstance(truth, SemanticMap) else int(np.max(truth)) + 1
    pred, truth = _labels(pred, num_classes), _labels(truth, num_classes)
    if pred.shape != truth.shape:
        raise ShapeError("label maps differ in dims: %s and %s" % (pred.shape, truth.shape))
    return float(np.mean(pred == truth))


def _names(directory, extension):
    return sorted(os.path.basename(path)[:-len(extension)]
                  for path in glob.glob(os.path.join(directory, "*" + extension)))


def evaluate_directories(pred_dir, truth_dir, metrics=METRICS, num_classes=None):
    """
    Score predictions against ground truth files of the same name.

    Images are ``<name>.ppm``; parsing maps (needed for ``mssim`` in the truth directory and for ``miou`` in
    both) are ``<name>.pgm``.

    Returns
    -------
    DataFrame
        One row per name plus a final "mean" row; one column per metric.

    Raises
    ------
    ValidationError
        On an unknown metric.
    FormatError
        If a needed file is missing or there is nothing to compare.
    """
    unknown = [m for m in metrics if m not in METRICS]
    if unknown:
        raise ValidationError("unknown metric %r, choose from %s" % (unknown[0], ", ".join(METRICS)))
    needs_images = "ssim" in metrics or "mssim" in metrics
    names = _names(pred_dir, ".ppm" if needs_images else ".pgm")
    if not names:
        raise FormatError("no predictions found in %s" % pred_dir)

    rows = []
    for name in names:
        def path(directory, extension):
            full = os.path.join(directory, name + extension)
            if not os.path.exists(full):
                raise FormatError("missing %s" % full)
            return full

        row = {"name": name}
        if needs_images:
            pred_image = read_ppm(path(pred_dir, ".ppm"))
            true_image = read_ppm(path(truth_dir, ".ppm"))
            if "ssim" in metrics:
                row["ssim"] = ssim(pred_image, true_image)
        if "mssim" in metrics or "miou" in metrics:
            true_labels = read_pgm(path(truth_dir, ".pgm"))
            classes = num_classes or int(true_labels.max()) + 1
            if "mssim" in metrics:
                row["mssim"] = masked_ssim(pred_image, true_image, SemanticMap(true_labels, classes))
            if "miou" in metrics:
                pred_labels = read_pgm(path(pred_dir, ".pgm"))
                classes = max(classes, num_classes or int(pred_labels.max()) + 1)
                row["miou"] = miou(pred_labels, true_labels, classes)
        rows.append(row)

    table = DataFrame(rows, columns=["name"] + [m for m in METRICS if m in metrics])
    mean = table.drop(columns="name").mean()
    table.loc[len(table)] = ["mean"] + list(mean.values)
    LOGGER.info("Evaluated %i predictions: %s", len(names),
                ", ".join("%s=%.4f" % item for item in mean.items()))
    return table
