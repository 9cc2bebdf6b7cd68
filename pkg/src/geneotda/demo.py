"""A 3x3 image pair small enough to verify the whole pipeline by hand.

Vertices are also addressable by the letters a..i, assigned row by row from
the bottom image row up: a,b,c on the bottom row, d,e,f in the middle,
g,h,i on top.  With these two intensity matrices the sublevel set of the
identity-graded bifiltration at grade (4, 6) is exactly the path a - b - c.
"""

from __future__ import annotations

import numpy as np

from .complexes import Bifiltration, bifiltration_from_images
from .image import GrayImage

DEMO_MATRIX_1 = ((7, 5, 3), (8, 6, 9), (1, 4, 2))
DEMO_MATRIX_2 = ((3, 2, 7), (4, 9, 8), (5, 6, 1))

LETTERS = "abcdefghi"


def demo_pair() -> tuple[GrayImage, GrayImage]:
    return GrayImage(np.array(DEMO_MATRIX_1, float)), GrayImage(np.array(DEMO_MATRIX_2, float))


def demo_bifiltration(triangle_rule: str = "square-max") -> Bifiltration:
    phi1, phi2 = demo_pair()
    return bifiltration_from_images(phi1, phi2, triangle_rule)


def letter_vertex(letter: str, width: int = 3, height: int = 3) -> int:
    """Vertex id of a letter label (letters run bottom row up, left to right)."""
    i = LETTERS.index(letter)
    row_from_bottom, col = divmod(i, width)
    return (height - 1 - row_from_bottom) * width + col


def vertex_letter(vid: int, width: int = 3, height: int = 3) -> str:
    row, col = divmod(vid, width)
    return LETTERS[(height - 1 - row) * width + col]
