"""
Numeric visual-token pipeline on plain matrices: spatial token compression,
its inverse, the projection placeholder and multimodal sequence assembly.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import FrameOrderError, ShapeMismatch

logger = logging.getLogger(__name__)


@dataclass
class TokenGrid:
    """Patch tokens in row-major spatial order: data has height * width rows."""

    height: int
    width: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.height < 1 or self.width < 1:
            raise ShapeMismatch(f"grid must be at least 1x1, got {self.height}x{self.width}")
        if self.data.ndim != 2 or self.data.shape[0] != self.height * self.width or self.data.shape[1] < 1:
            raise ShapeMismatch(
                f"data shape {self.data.shape} does not match a {self.height}x{self.width} grid"
            )

    @property
    def channels(self) -> int:
        return self.data.shape[1]


@dataclass
class CompressedTokens:
    data: np.ndarray
    grid_size: int

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def compressed_shape(height: int, width: int, channels: int, g: int) -> Tuple[int, int]:
    return _ceil_div(height, g) * _ceil_div(width, g), channels * g * g


def stc_compress(grid: TokenGrid, g: int) -> CompressedTokens:
    """
    Spatial token compression.

    Zero-pads the grid on the bottom/right to a multiple of g, then
    concatenates each g x g cell's tokens channel-wise (row-major inside the
    cell). Output cells are ordered row-major over the coarse grid.
    """
    if g < 1:
        raise ValueError(f"grid size must be >= 1, got {g}")
    h, w, c = grid.height, grid.width, grid.channels
    hc, wc = _ceil_div(h, g), _ceil_div(w, g)

    fmap = grid.data.reshape(h, w, c)
    fmap = np.pad(fmap, ((0, hc * g - h), (0, wc * g - w), (0, 0)))
    cells = fmap.reshape(hc, g, wc, g, c).transpose(0, 2, 1, 3, 4)
    return CompressedTokens(data=cells.reshape(hc * wc, g * g * c), grid_size=g)


def stc_decompress(comp: CompressedTokens, original_h: int, original_w: int) -> TokenGrid:
    """Exact inverse of stc_compress; padding is discarded."""
    g = comp.grid_size
    if g < 1 or original_h < 1 or original_w < 1:
        raise ShapeMismatch(f"invalid target shape {original_h}x{original_w} for grid size {g}")
    hc, wc = _ceil_div(original_h, g), _ceil_div(original_w, g)
    if comp.data.ndim != 2 or comp.rows != hc * wc or comp.channels % (g * g):
        raise ShapeMismatch(
            f"compressed shape {comp.data.shape} inconsistent with {original_h}x{original_w}, g={g}"
        )
    c = comp.channels // (g * g)

    fmap = comp.data.reshape(hc, wc, g, g, c).transpose(0, 2, 1, 3, 4).reshape(hc * g, wc * g, c)
    fmap = fmap[:original_h, :original_w]
    return TokenGrid(original_h, original_w, fmap.reshape(original_h * original_w, c))


def project(tokens: np.ndarray, weight: Optional[np.ndarray] = None,
            bias: Optional[np.ndarray] = None) -> np.ndarray:
    """Projector placeholder: identity, or the caller's affine map tokens @ weight + bias."""
    tokens = np.asarray(tokens, dtype=np.float64)
    if weight is None:
        return tokens
    weight = np.asarray(weight, dtype=np.float64)
    if weight.ndim != 2 or weight.shape[0] != tokens.shape[1]:
        raise ShapeMismatch(f"cannot project width {tokens.shape[1]} with weight {weight.shape}")
    out = tokens @ weight
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float64)
        if bias.shape != (weight.shape[1],):
            raise ShapeMismatch(f"bias shape {bias.shape} does not match output width {weight.shape[1]}")
        out = out + bias
    return out


@dataclass
class SequenceBlock:
    kind: str  # "visual" or "text"
    tokens: np.ndarray
    frame_index: Optional[int] = None

    @property
    def label(self) -> str:
        return f"V{self.frame_index}" if self.kind == "visual" else "T"


@dataclass
class MultimodalSequence:
    blocks: List[SequenceBlock] = field(default_factory=list)
    width: int = 0

    @property
    def length(self) -> int:
        return sum(block.tokens.shape[0] for block in self.blocks)

    def block_order(self) -> List[str]:
        return [block.label for block in self.blocks]

    def as_matrix(self) -> np.ndarray:
        return np.vstack([block.tokens for block in self.blocks])


def assemble_sequence(visual: Sequence[Tuple[int, np.ndarray]], text: np.ndarray) -> MultimodalSequence:
    """
    Concatenate per-frame visual tokens (ascending frame order) and the text tokens.

    Raises:
        ShapeMismatch: blocks disagree on embedding width
        FrameOrderError: frame indices are not strictly increasing
    """
    text = np.asarray(text, dtype=np.float64)
    if text.ndim != 2:
        raise ShapeMismatch(f"text tokens must be 2D, got shape {text.shape}")
    width = text.shape[1]

    blocks = []
    previous = None
    for frame_index, tokens in visual:
        tokens = np.asarray(tokens, dtype=np.float64)
        if tokens.ndim != 2 or tokens.shape[1] != width:
            raise ShapeMismatch(f"frame {frame_index} tokens {tokens.shape} do not match width {width}")
        if previous is not None and frame_index <= previous:
            raise FrameOrderError(f"frame {frame_index} follows frame {previous}")
        previous = frame_index
        blocks.append(SequenceBlock("visual", tokens, frame_index))

    blocks.append(SequenceBlock("text", text))
    return MultimodalSequence(blocks=blocks, width=width)
