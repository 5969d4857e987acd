r"""Graded scoring of B-line detections against annotated boxes.

A box of half-width :math:`h` around its center :math:`c` is divided into
ten regions on each side of the center.  A detection at column
:math:`x` scores

.. math::

   s(x) = 1 - \frac{1}{10} \left\lfloor \frac{10 |x - c|}{h} \right\rfloor

inside the box and 0 on or beyond its edges.  Detections and boxes are
matched one to one, best score first, and a matched detection scoring
strictly more than the threshold (0.5) is a true positive.
"""

from __future__ import division
from __future__ import unicode_literals

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from luslines.errors import ParameterError, StorageError
from luslines.phantom import Box, GroundTruth

__docformat__ = 'restructuredtext'

__all__ = ["score_detection", "f_beta", "ScoreReport", "match_detections",
           "aggregate", "save_scores", "CSV_COLUMNS"]

CSV_COLUMNS = ["image", "Precision", "Recall", "F1", "F2", "Num_Bline",
               "Num_Detection", "TP", "FP", "FN"]


def _extent(box):
    if isinstance(box, Box):
        return box.x_min, box.x_max
    x_min, x_max = box[:2]
    return x_min, x_max


def score_detection(x_d, box):
    """Graded score of a detection at column `x_d` for `box`.

    Parameters
    ----------
    x_d : float
    box : :class:`~luslines.phantom.Box` or (x_min, x_max)

    Examples
    --------
    >>> box = Box(0, 40)
    >>> print(score_detection(20, box), score_detection(25, box),
    ...       score_detection(40, box), score_detection(41, box))
    1.0 0.8 0.0 0.0

    The score is symmetric about the center and falls off with distance.

    >>> scores = [score_detection(20 + d, box) for d in np.arange(0, 21, 0.5)]
    >>> print(scores == [score_detection(20 - d, box)
    ...                  for d in np.arange(0, 21, 0.5)],
    ...       all(np.diff(scores) <= 0))
    True True
    >>> score_detection(3, (5, 5))
    Traceback (most recent call last):
    ...
    luslines.errors.ParameterError: box needs x_min < x_max, got [5, 5]
    """
    x_min, x_max = _extent(box)
    if not x_min < x_max:
        raise ParameterError("box needs x_min < x_max, got [{}, {}]"
                             .format(x_min, x_max))
    center = (x_min + x_max) / 2.
    half = (x_max - x_min) / 2.
    distance = abs(x_d - center)
    if distance >= half:
        return 0.
    region = int(np.floor(10 * distance / half))
    return (10 - region) / 10.


def f_beta(precision, recall, beta):
    r"""Weighted harmonic mean :math:`(1 + \beta^2) P R / (\beta^2 P + R)`.

    Returns None when either input is None or the denominator vanishes.

    Examples
    --------
    >>> print(round(f_beta(0.47, 0.70, 2), 3), f_beta(1., 1., 1))
    0.638 1.0
    >>> print(f_beta(None, 0.5, 2), f_beta(0., 0., 1))
    None None
    """
    if precision is None or recall is None:
        return None
    denominator = beta**2 * precision + recall
    if denominator == 0:
        return None
    return (1 + beta**2) * precision * recall / denominator


def _ratio(numerator, denominator):
    return None if denominator == 0 else numerator / denominator


@dataclass(frozen=True)
class ScoreReport(object):
    """Counts and ratios of one frame or of a set of frames.

    Parameters
    ----------
    tp, fp, fn : int
        True positives, false positives and false negatives.
    per_detection : tuple of (int, int or None, float)
        Detection index, matched box index and score.

    Ratios whose denominator vanishes are None.
    """
    tp: int
    fp: int
    fn: int
    per_detection: tuple = field(default=(), repr=False)

    @property
    def n_boxes(self):
        return self.tp + self.fn

    @property
    def n_detections(self):
        return self.tp + self.fp

    @property
    def precision(self):
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self):
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self):
        return f_beta(self.precision, self.recall, 1)

    @property
    def f2(self):
        return f_beta(self.precision, self.recall, 2)

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "precision": self.precision, "recall": self.recall,
                "f1": self.f1, "f2": self.f2,
                "per_detection": [{"detection": d, "box": b, "score": s}
                                  for d, b, s in self.per_detection]}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def row(self, name):
        """CSV row under :data:`CSV_COLUMNS`."""
        def text(value):
            return "nan" if value is None else format(value, ".6g")
        return [name, text(self.precision), text(self.recall),
                text(self.f1), text(self.f2), self.n_boxes,
                self.n_detections, self.tp, self.fp, self.fn]


def _column(detection):
    return getattr(detection, "spatial_x", detection)


def match_detections(dets, gts, threshold=0.5):
    """Match B-line detections to boxes one to one, best score first.

    Parameters
    ----------
    dets : list of float or :class:`~luslines.lineIdentification.Detection`
        Detected columns.
    gts : list of :class:`~luslines.phantom.Box` or
          :class:`~luslines.phantom.GroundTruth`
        B-line boxes; other kinds in a ground truth are ignored.
    threshold : float
        Matched detections scoring strictly more are true positives.

    Returns
    -------
    :class:`ScoreReport`

    Examples
    --------
    >>> box = Box(20, 40)
    >>> report = match_detections([30.], [box])
    >>> print(report.tp, report.fp, report.fn, report.precision, report.f2)
    1 0 0 1.0 1.0
    >>> report = match_detections([], [box, Box(60, 80)])
    >>> print(report.tp, report.fn, report.precision, report.recall)
    0 2 None 0.0

    One box takes a single detection.

    >>> report = match_detections([27.5, 32.5], [box])
    >>> print(report.tp, report.fp, report.fn, report.per_detection)
    1 1 0 ((0, 0, 0.8), (1, None, 0.0))

    A score of exactly the threshold is not enough.

    >>> print(match_detections([35.], [box]).tp)
    0
    """
    if isinstance(gts, GroundTruth):
        gts = gts.of_kind("B")
    columns = [float(_column(d)) for d in dets]
    scores = np.array([[score_detection(x, box) for box in gts]
                       for x in columns]).reshape(len(columns), len(gts))

    pairs = sorted(((-scores[i, j], i, j)
                    for i in range(len(columns)) for j in range(len(gts))
                    if scores[i, j] > 0))
    box_of = {}
    taken = set()
    for _, i, j in pairs:
        if i not in box_of and j not in taken:
            box_of[i] = j
            taken.add(j)

    per_detection = []
    tp = 0
    for i in range(len(columns)):
        j = box_of.get(i)
        score = 0. if j is None else float(scores[i, j])
        if j is not None and score > threshold:
            tp += 1
        per_detection.append((i, j, score))
    return ScoreReport(tp=tp, fp=len(columns) - tp, fn=len(gts) - tp,
                       per_detection=tuple(per_detection))


def aggregate(reports):
    """Pool the counts of several reports.

    Examples
    --------
    >>> a = ScoreReport(tp=1, fp=1, fn=0)
    >>> b = ScoreReport(tp=0, fp=0, fn=1)
    >>> pooled = aggregate([a, b])
    >>> print(pooled.precision, pooled.recall, aggregate([a]) == a)
    0.5 0.5 True
    """
    per_detection = tuple(entry for report in reports
                          for entry in report.per_detection)
    return ScoreReport(tp=sum(report.tp for report in reports),
                       fp=sum(report.fp for report in reports),
                       fn=sum(report.fn for report in reports),
                       per_detection=per_detection)


def save_scores(named_reports, path, total="all"):
    """Write one CSV row per ``(name, report)`` and a pooled row `total`.

    Examples
    --------
    >>> import os, tempfile
    >>> path = os.path.join(tempfile.mkdtemp(), "scores.csv")
    >>> save_scores([("a", ScoreReport(1, 0, 0)),
    ...              ("b", ScoreReport(0, 0, 2))], path)
    >>> print(open(path).read().strip())
    image,Precision,Recall,F1,F2,Num_Bline,Num_Detection,TP,FP,FN
    a,1,1,1,1,1,1,1,0,0
    b,nan,0,nan,nan,2,0,0,0,2
    all,1,0.333333,0.5,0.384615,3,1,1,0,2
    """
    named_reports = list(named_reports)
    pooled = aggregate([report for _, report in named_reports])
    try:
        with open(path, "w", newline="") as fobj:
            writer = csv.writer(fobj, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for name, report in named_reports:
                writer.writerow(report.row(name))
            writer.writerow(pooled.row(total))
    except OSError as exc:
        raise StorageError("{}: cannot write scores ({})".format(path, exc))
