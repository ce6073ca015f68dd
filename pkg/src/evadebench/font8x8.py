"""Embedded 8x8 fixed-width bitmap font covering printable ASCII.

Glyphs are stored as art strings ('#' = inked) and parsed once at import
into {0,1} uint8 arrays. Self-contained on purpose: overlay rendering must
be bit-identical everywhere, which rules out system font dependencies.
"""

from __future__ import annotations

import numpy as np

GLYPH_SIDE = 8

_ART = {
    " ": ("........", "........", "........", "........",
          "........", "........", "........", "........"),
    "!": ("..##....", "..##....", "..##....", "..##....",
          "..##....", "........", "..##....", "........"),
    '"': (".##.##..", ".##.##..", "..#..#..", "........",
          "........", "........", "........", "........"),
    "#": (".##.##..", ".##.##..", "#######.", ".##.##..",
          "#######.", ".##.##..", ".##.##..", "........"),
    "$": ("..##....", ".#####..", "##......", ".####...",
          "....##..", "#####...", "..##....", "........"),
    "%": ("##...##.", "##..##..", "...##...", "..##....",
          ".##.....", "##..##..", "#....##.", "........"),
    "&": ("..###...", ".##.##..", "..###...", ".###.##.",
          "##.###..", "##..##..", ".###.##.", "........"),
    "'": ("..##....", "..##....", "...#....", "........",
          "........", "........", "........", "........"),
    "(": ("...##...", "..##....", ".##.....", ".##.....",
          ".##.....", "..##....", "...##...", "........"),
    ")": (".##.....", "..##....", "...##...", "...##...",
          "...##...", "..##....", ".##.....", "........"),
    "*": ("........", ".##..##.", "..####..", "########",
          "..####..", ".##..##.", "........", "........"),
    "+": ("........", "..##....", "..##....", "######..",
          "..##....", "..##....", "........", "........"),
    ",": ("........", "........", "........", "........",
          "........", "..##....", "..##....", ".##....."),
    "-": ("........", "........", "........", "######..",
          "........", "........", "........", "........"),
    ".": ("........", "........", "........", "........",
          "........", "..##....", "..##....", "........"),
    "/": (".....##.", "....##..", "...##...", "..##....",
          ".##.....", "##......", "#.......", "........"),
    "0": (".####...", "##..##..", "##.###..", "###.##..",
          "##..##..", "##..##..", ".####...", "........"),
    "1": ("..##....", ".###....", "..##....", "..##....",
          "..##....", "..##....", "######..", "........"),
    "2": (".####...", "##..##..", "....##..", "...##...",
          "..##....", ".##.....", "######..", "........"),
    "3": (".####...", "##..##..", "....##..", "..###...",
          "....##..", "##..##..", ".####...", "........"),
    "4": ("...###..", "..####..", ".##.##..", "##..##..",
          "######..", "....##..", "....##..", "........"),
    "5": ("######..", "##......", "#####...", "....##..",
          "....##..", "##..##..", ".####...", "........"),
    "6": (".####...", "##..##..", "##......", "#####...",
          "##..##..", "##..##..", ".####...", "........"),
    "7": ("######..", "....##..", "...##...", "..##....",
          "..##....", "..##....", "..##....", "........"),
    "8": (".####...", "##..##..", "##..##..", ".####...",
          "##..##..", "##..##..", ".####...", "........"),
    "9": (".####...", "##..##..", "##..##..", ".#####..",
          "....##..", "##..##..", ".####...", "........"),
    ":": ("........", "........", "..##....", "..##....",
          "........", "..##....", "..##....", "........"),
    ";": ("........", "........", "..##....", "..##....",
          "........", "..##....", "..##....", ".##....."),
    "<": ("...##...", "..##....", ".##.....", "##......",
          ".##.....", "..##....", "...##...", "........"),
    "=": ("........", "........", "######..", "........",
          "######..", "........", "........", "........"),
    ">": ("##......", ".##.....", "..##....", "...##...",
          "..##....", ".##.....", "##......", "........"),
    "?": (".####...", "##..##..", "....##..", "...##...",
          "..##....", "........", "..##....", "........"),
    "@": (".#####..", "##...##.", "##.####.", "##.####.",
          "##.####.", "##......", ".####...", "........"),
    "A": ("..##....", ".####...", "##..##..", "##..##..",
          "######..", "##..##..", "##..##..", "........"),
    "B": ("#####...", "##..##..", "##..##..", "#####...",
          "##..##..", "##..##..", "#####...", "........"),
    "C": (".####...", "##..##..", "##......", "##......",
          "##......", "##..##..", ".####...", "........"),
    "D": ("####....", "##.##...", "##..##..", "##..##..",
          "##..##..", "##.##...", "####....", "........"),
    "E": ("######..", "##......", "##......", "#####...",
          "##......", "##......", "######..", "........"),
    "F": ("######..", "##......", "##......", "#####...",
          "##......", "##......", "##......", "........"),
    "G": (".####...", "##..##..", "##......", "##.###..",
          "##..##..", "##..##..", ".#####..", "........"),
    "H": ("##..##..", "##..##..", "##..##..", "######..",
          "##..##..", "##..##..", "##..##..", "........"),
    "I": ("####....", ".##.....", ".##.....", ".##.....",
          ".##.....", ".##.....", "####....", "........"),
    "J": ("..####..", "...##...", "...##...", "...##...",
          "##.##...", "##.##...", ".###....", "........"),
    "K": ("##..##..", "##.##...", "####....", "###.....",
          "####....", "##.##...", "##..##..", "........"),
    "L": ("##......", "##......", "##......", "##......",
          "##......", "##......", "######..", "........"),
    "M": ("##...##.", "###.###.", "#######.", "##.#.##.",
          "##...##.", "##...##.", "##...##.", "........"),
    "N": ("##..##..", "###.##..", "######..", "##.###..",
          "##..##..", "##..##..", "##..##..", "........"),
    "O": (".####...", "##..##..", "##..##..", "##..##..",
          "##..##..", "##..##..", ".####...", "........"),
    "P": ("#####...", "##..##..", "##..##..", "#####...",
          "##......", "##......", "##......", "........"),
    "Q": (".####...", "##..##..", "##..##..", "##..##..",
          "##.###..", ".####...", "...###..", "........"),
    "R": ("#####...", "##..##..", "##..##..", "#####...",
          "####....", "##.##...", "##..##..", "........"),
    "S": (".####...", "##..##..", "##......", ".####...",
          "....##..", "##..##..", ".####...", "........"),
    "T": ("######..", "..##....", "..##....", "..##....",
          "..##....", "..##....", "..##....", "........"),
    "U": ("##..##..", "##..##..", "##..##..", "##..##..",
          "##..##..", "##..##..", ".####...", "........"),
    "V": ("##..##..", "##..##..", "##..##..", "##..##..",
          "##..##..", ".####...", "..##....", "........"),
    "W": ("##...##.", "##...##.", "##...##.", "##.#.##.",
          "#######.", "###.###.", "##...##.", "........"),
    "X": ("##..##..", "##..##..", ".####...", "..##....",
          ".####...", "##..##..", "##..##..", "........"),
    "Y": ("##..##..", "##..##..", "##..##..", ".####...",
          "..##....", "..##....", "..##....", "........"),
    "Z": ("######..", "....##..", "...##...", "..##....",
          ".##.....", "##......", "######..", "........"),
    "[": ("####....", "##......", "##......", "##......",
          "##......", "##......", "####....", "........"),
    "\\": ("#.......", "##......", ".##.....", "..##....",
           "...##...", "....##..", ".....##.", "........"),
    "]": ("####....", "..##....", "..##....", "..##....",
          "..##....", "..##....", "####....", "........"),
    "^": ("..##....", ".####...", "##..##..", "........",
          "........", "........", "........", "........"),
    "_": ("........", "........", "........", "........",
          "........", "........", "........", "#######."),
    "`": (".##.....", "..##....", "...#....", "........",
          "........", "........", "........", "........"),
    "a": ("........", "........", ".####...", "....##..",
          ".#####..", "##..##..", ".#####..", "........"),
    "b": ("##......", "##......", "#####...", "##..##..",
          "##..##..", "##..##..", "#####...", "........"),
    "c": ("........", "........", ".####...", "##..##..",
          "##......", "##..##..", ".####...", "........"),
    "d": ("....##..", "....##..", ".#####..", "##..##..",
          "##..##..", "##..##..", ".#####..", "........"),
    "e": ("........", "........", ".####...", "##..##..",
          "######..", "##......", ".####...", "........"),
    "f": ("..###...", ".##.....", ".##.....", "####....",
          ".##.....", ".##.....", ".##.....", "........"),
    "g": ("........", "........", ".#####..", "##..##..",
          "##..##..", ".#####..", "....##..", ".####..."),
    "h": ("##......", "##......", "#####...", "##..##..",
          "##..##..", "##..##..", "##..##..", "........"),
    "i": (".##.....", "........", "###.....", ".##.....",
          ".##.....", ".##.....", "####....", "........"),
    "j": ("...##...", "........", "...##...", "...##...",
          "...##...", "...##...", "##.##...", ".###...."),
    "k": ("##......", "##......", "##..##..", "##.##...",
          "####....", "##.##...", "##..##..", "........"),
    "l": ("###.....", ".##.....", ".##.....", ".##.....",
          ".##.....", ".##.....", "####....", "........"),
    "m": ("........", "........", "###.##..", "#######.",
          "##.#.##.", "##.#.##.", "##...##.", "........"),
    "n": ("........", "........", "#####...", "##..##..",
          "##..##..", "##..##..", "##..##..", "........"),
    "o": ("........", "........", ".####...", "##..##..",
          "##..##..", "##..##..", ".####...", "........"),
    "p": ("........", "........", "#####...", "##..##..",
          "##..##..", "#####...", "##......", "##......"),
    "q": ("........", "........", ".#####..", "##..##..",
          "##..##..", ".#####..", "....##..", "....##.."),
    "r": ("........", "........", "##.###..", "###.....",
          "##......", "##......", "##......", "........"),
    "s": ("........", "........", ".#####..", "##......",
          ".####...", "....##..", "#####...", "........"),
    "t": (".##.....", ".##.....", "####....", ".##.....",
          ".##.....", ".##.....", "..###...", "........"),
    "u": ("........", "........", "##..##..", "##..##..",
          "##..##..", "##..##..", ".#####..", "........"),
    "v": ("........", "........", "##..##..", "##..##..",
          "##..##..", ".####...", "..##....", "........"),
    "w": ("........", "........", "##...##.", "##.#.##.",
          "##.#.##.", "#######.", ".##.##..", "........"),
    "x": ("........", "........", "##..##..", ".####...",
          "..##....", ".####...", "##..##..", "........"),
    "y": ("........", "........", "##..##..", "##..##..",
          "##..##..", ".#####..", "....##..", ".####..."),
    "z": ("........", "........", "######..", "...##...",
          "..##....", ".##.....", "######..", "........"),
    "{": ("...###..", "..##....", "..##....", ".##.....",
          "..##....", "..##....", "...###..", "........"),
    "|": ("..##....", "..##....", "..##....", "..##....",
          "..##....", "..##....", "..##....", "........"),
    "}": ("###.....", "..##....", "..##....", "...##...",
          "..##....", "..##....", "###.....", "........"),
    "~": (".###.##.", "##.###..", "........", "........",
          "........", "........", "........", "........"),
}


def _parse() -> dict[str, np.ndarray]:
    glyphs = {}
    for ch, rows in _ART.items():
        if len(rows) != GLYPH_SIDE or any(len(r) != GLYPH_SIDE for r in rows):
            raise AssertionError(f"glyph {ch!r} is not {GLYPH_SIDE}x{GLYPH_SIDE}")
        bitmap = np.array([[1 if c == "#" else 0 for c in row] for row in rows],
                          dtype=np.uint8)
        glyphs[ch] = bitmap
    return glyphs


GLYPHS = _parse()


def has_glyph(ch: str) -> bool:
    return ch in GLYPHS


def glyph_bitmap(ch: str) -> np.ndarray:
    """The (8, 8) {0,1} bitmap for a character; KeyError if unsupported."""
    return GLYPHS[ch]
