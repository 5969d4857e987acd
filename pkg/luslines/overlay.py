"""Pictures of identified lines drawn over their frame.

The gray overlay halves the frame and paints the pleural line at 255, the
A-lines at 192 and the B-lines at 128 (8-bit codes).  The colour overlay
paints them red, blue and green.

Examples
--------
>>> from luslines.images import Geometry
>>> from luslines.lineIdentification import Detection, DetectionResult
>>> geo = Geometry.default(32, 40)
>>> result = DetectionResult(
...     pleural=Detection("pleural", geo.depth_to_r(10), 90., 1.,
...                       spatial_depth=10.),
...     alines=[Detection("A", geo.depth_to_r(20), 90., .5,
...                       spatial_depth=20.)],
...     blines=[Detection("B", 0.5, 0., 1., spatial_x=20.)])
>>> codes = overlay_codes(Image(np.zeros((32, 40))), result, geo)
>>> print(codes[10, 5], codes[20, 5], codes[25, 20], codes[20, 20])
255 192 128 192

B-lines start at the pleural line.

>>> print(codes[5, 20], codes[0, 0])
0 0

The frame shows through dimmed wherever no line is drawn.

>>> codes = overlay_codes(Image(np.full((32, 40), 0.4)), result, geo)
>>> print(codes[25, 5], codes[5, 20])
51 51
"""

from __future__ import division
from __future__ import unicode_literals

import numpy as np
from PIL import Image as PILImage

from luslines.errors import StorageError
from luslines.images import Image, save_image
from luslines.lineIdentification import line_column, line_depth

__docformat__ = 'restructuredtext'

__all__ = ["GRAY_CODES", "COLOURS", "overlay_codes", "save_overlay",
           "save_colour_overlay"]

GRAY_CODES = {"pleural": 255, "A": 192, "B": 128}
COLOURS = {"pleural": (255, 0, 0), "A": (0, 0, 255), "B": (0, 255, 0)}

_DIM = 0.5


def _locus(detection, geo, top=0.):
    """Pixel rows and columns of a detected line.

    Horizontal lines are traced column by column; B-lines row by row from
    `top` to the bottom of the frame.
    """
    if detection.kind == "B":
        rows = np.arange(int(np.ceil(top)), geo.image_h)
        cols = np.array([line_column(detection.r, detection.omega, row, geo)
                         for row in rows])
    else:
        cols = np.arange(geo.image_w)
        rows = np.array([line_depth(detection.r, detection.omega, col, geo)
                         for col in cols])
    rows = np.round(rows).astype(int)
    cols = np.round(cols).astype(int)
    inside = ((rows >= 0) & (rows < geo.image_h)
              & (cols >= 0) & (cols < geo.image_w))
    return rows[inside], cols[inside]


def _loci(result, geo):
    top = 0. if result.pleural is None else result.pleural.spatial_depth
    # B first so that horizontal lines stay on top
    for line in result.blines:
        yield line.kind, _locus(line, geo, top)
    for line in result.alines:
        yield line.kind, _locus(line, geo)
    if result.pleural is not None:
        yield result.pleural.kind, _locus(result.pleural, geo)


def overlay_codes(y, result, geo):
    """8-bit gray overlay of `result` on `y` as a `uint8` array."""
    geo.check_image(y)
    codes = np.round(np.clip(y.pixels, 0., 1.) * _DIM * 255).astype(np.uint8)
    for kind, (rows, cols) in _loci(result, geo):
        codes[rows, cols] = GRAY_CODES[kind]
    return codes


def save_overlay(y, result, geo, path):
    """Write the gray overlay of `result` on `y` as an 8-bit PGM."""
    save_image(Image(overlay_codes(y, result, geo) / 255.), path)


def save_colour_overlay(y, result, geo, path):
    """Write the colour overlay of `result` on `y` as an RGB PNG.

    Examples
    --------
    >>> import os, tempfile
    >>> from luslines.images import Geometry
    >>> from luslines.lineIdentification import Detection, DetectionResult
    >>> geo = Geometry.default(32, 40)
    >>> result = DetectionResult(pleural=Detection(
    ...     "pleural", geo.depth_to_r(10), 90., 1., spatial_depth=10.))
    >>> path = os.path.join(tempfile.mkdtemp(), "overlay.png")
    >>> save_colour_overlay(Image(np.zeros((32, 40))), result, geo, path)
    >>> with PILImage.open(path) as pil:
    ...     print(pil.mode, pil.size, pil.getpixel((3, 10)), pil.getpixel((3, 3)))
    RGB (40, 32) (255, 0, 0) (0, 0, 0)
    """
    geo.check_image(y)
    gray = np.round(np.clip(y.pixels, 0., 1.) * _DIM * 255).astype(np.uint8)
    rgb = np.repeat(gray[..., np.newaxis], 3, axis=2)
    for kind, (rows, cols) in _loci(result, geo):
        rgb[rows, cols] = COLOURS[kind]
    try:
        PILImage.fromarray(rgb).save(path, format="PNG")
    except OSError as exc:
        raise StorageError("{}: cannot write overlay ({})".format(path, exc))
