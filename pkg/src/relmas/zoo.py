"""Bundled synthetic model set.

Seven coarse-grained models whose total MACs and parameter footprints roughly
follow the published figures of the networks they are named after. Layers are
aggregated blocks (int8 tensors), not the real per-layer shapes.
"""
from __future__ import annotations

from .core import DnnModelDesc, LayerDesc

K = 1_000
M = 1_000_000

# (macs, input_bytes, weight_bytes, output_bytes) per block
_ZOO: dict[str, list[tuple[int, int, int, int]]] = {
    "SqueezeNet": [
        (22 * M, 150 * K, 2 * K, 790 * K),
        (60 * M, 190 * K, 12 * K, 380 * K),
        (85 * M, 380 * K, 45 * K, 190 * K),
        (70 * M, 190 * K, 170 * K, 95 * K),
        (75 * M, 95 * K, 460 * K, 95 * K),
        (38 * M, 95 * K, 510 * K, 1 * K),
    ],
    "YOLO-Lite": [
        (26 * M, 520 * K, 1 * K, 830 * K),
        (42 * M, 830 * K, 5 * K, 420 * K),
        (42 * M, 420 * K, 18 * K, 210 * K),
        (42 * M, 210 * K, 74 * K, 105 * K),
        (42 * M, 105 * K, 295 * K, 52 * K),
        (30 * M, 52 * K, 590 * K, 26 * K),
        (8 * M, 26 * K, 64 * K, 21 * K),
    ],
    "KeywordSpotting": [
        (1_600 * K, 1 * K, 3 * K, 32 * K),
        (1_200 * K, 32 * K, 9 * K, 32 * K),
        (1_200 * K, 32 * K, 9 * K, 32 * K),
        (1_200 * K, 32 * K, 9 * K, 32 * K),
        (200 * K, 32 * K, 9 * K, 1 * K),
    ],
    "AlexNet": [
        (105 * M, 150 * K, 35 * K, 290 * K),
        (224 * M, 70 * K, 307 * K, 187 * K),
        (150 * M, 43 * K, 664 * K, 65 * K),
        (112 * M, 65 * K, 885 * K, 65 * K),
        (75 * M, 65 * K, 590 * K, 43 * K),
        (38 * M, 9 * K, 37_750 * K, 4 * K),
        (17 * M, 4 * K, 16_780 * K, 4 * K),
        (4 * M, 4 * K, 4_100 * K, 1 * K),
    ],
    "InceptionV3": [
        (350 * M, 270 * K, 30 * K, 2_300 * K),
        (700 * M, 2_300 * K, 250 * K, 900 * K),
        (560 * M, 900 * K, 260 * K, 290 * K),
        (600 * M, 290 * K, 290 * K, 290 * K),
        (640 * M, 290 * K, 1_150 * K, 220 * K),
        (720 * M, 220 * K, 1_700 * K, 220 * K),
        (720 * M, 220 * K, 2_400 * K, 220 * K),
        (700 * M, 220 * K, 3_100 * K, 130 * K),
        (560 * M, 130 * K, 5_600 * K, 130 * K),
        (150 * M, 130 * K, 8_700 * K, 1 * K),
    ],
    "ResNet50": [
        (118 * M, 150 * K, 9 * K, 800 * K),
        (220 * M, 800 * K, 70 * K, 800 * K),
        (460 * M, 800 * K, 150 * K, 800 * K),
        (410 * M, 800 * K, 380 * K, 400 * K),
        (620 * M, 400 * K, 830 * K, 400 * K),
        (720 * M, 400 * K, 1_600 * K, 200 * K),
        (720 * M, 200 * K, 2_900 * K, 200 * K),
        (410 * M, 200 * K, 4_600 * K, 100 * K),
        (410 * M, 100 * K, 10_000 * K, 100 * K),
        (10 * M, 100 * K, 2_050 * K, 1 * K),
    ],
    "YOLO-V2": [
        (150 * M, 520 * K, 1 * K, 5_500 * K),
        (800 * M, 5_500 * K, 18 * K, 2_800 * K),
        (1_700 * M, 2_800 * K, 150 * K, 1_400 * K),
        (1_700 * M, 1_400 * K, 590 * K, 700 * K),
        (2_200 * M, 700 * K, 2_400 * K, 350 * K),
        (2_200 * M, 350 * K, 9_400 * K, 350 * K),
        (2_300 * M, 350 * K, 11_800 * K, 350 * K),
        (2_400 * M, 350 * K, 12_000 * K, 350 * K),
        (2_100 * M, 350 * K, 11_000 * K, 350 * K),
        (90 * M, 350 * K, 640 * K, 70 * K),
    ],
}

MODEL_NAMES: tuple[str, ...] = tuple(_ZOO)


def builtin_models(names=None) -> tuple[DnnModelDesc, ...]:
    """Return the bundled models, ids assigned in the order requested."""
    names = list(names) if names is not None else list(MODEL_NAMES)
    out = []
    for model_id, name in enumerate(names):
        blocks = _ZOO[name]
        layers = tuple(LayerDesc(s, *row) for s, row in enumerate(blocks))
        out.append(DnnModelDesc(model_id, name, layers))
    return tuple(out)
