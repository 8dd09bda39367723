"""Synthetic scene corpus: glyph renderings with exactly generable captions.

Each scene is a small graph (object groups with shape/color/count, an
optional background and style); the caption is produced by a fixed
grammar and the image is rendered deterministically from the graph, so
every caption is exactly verifiable against its own image. The scene
database doubles as the ground truth for the oracle judge, keyed by a
content hash of the rendered pixels.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import torch

from ..core.errors import LookupErrorJudge, ParameterError
from ..core.text import TextPrompt, Vocabulary, tokenize
from ..core.types import ImageBatch

OBJECT_COLORS = ("red", "green", "blue", "yellow", "purple", "orange")
COLOR_RGB = {
    "red": (0.9, -0.8, -0.8),
    "green": (-0.8, 0.8, -0.8),
    "blue": (-0.8, -0.7, 0.9),
    "yellow": (0.9, 0.85, -0.8),
    "purple": (0.6, -0.8, 0.8),
    "orange": (0.9, 0.1, -0.8),
    "white": (0.95, 0.95, 0.95),
    "black": (-0.95, -0.95, -0.95),
    "gray": (0.0, 0.0, 0.0),
}
BACKGROUND_RGB = {
    None: (-1.0, -1.0, -1.0),
    "grass": (-0.6, 0.1, -0.6),
    "beach": (0.5, 0.3, -0.3),
    "street": (-0.25, -0.25, -0.25),
    "snow": (0.75, 0.75, 0.8),
}
COUNT_WORDS = {1: "one", 2: "two", 3: "three", 4: "four"}
PLURALS = {
    "dog": "dogs", "cat": "cats", "bird": "birds", "zebra": "zebras",
    "car": "cars", "house": "houses", "tree": "trees", "fish": "fish",
}
STYLE_BW = "black and white photo"

_GLYPHS = {
    "dog": ("X....X", "XXXXXX", "XXXXXX", "XXXXXX", "XXXXXX", "X.X.X."),
    "cat": (".X..X.", "XXXXXX", "X.XX.X", "XXXXXX", ".XXXX.", "..XX.."),
    "bird": ("..XX..", ".XXXX.", "XXXXXX", "..XX..", "..XX..", ".X..X."),
    "zebra": ("XXXXXX", "......", "XXXXXX", "......", "XXXXXX", "......"),
    "car": ("......", ".XXXX.", "XXXXXX", "XXXXXX", "X....X", "......"),
    "house": ("..XX..", ".XXXX.", "XXXXXX", "X.XX.X", "X.XX.X", "XXXXXX"),
    "tree": ("..XX..", ".XXXX.", "XXXXXX", ".XXXX.", "..X...", "..X..."),
    "fish": ("......", "X.XXX.", "XXXXXX", "X.XXX.", "......", "......"),
}


def glyph_mask(shape: str) -> np.ndarray:
    rows = _GLYPHS[shape]
    return np.array([[c == "X" for c in row] for row in rows], dtype=bool)


@dataclass(frozen=True)
class ObjectGroup:
    shape: str
    color: str
    count: int = 1


@dataclass
class Scene:
    objects: list
    background: str | None = None
    style: str | None = None
    patched: bool = False
    image_id: str = ""
    caption: str = ""

    def count_of(self, shape: str) -> int:
        return sum(g.count for g in self.objects if g.shape == shape)

    def has_object(self, shape: str) -> bool:
        return self.count_of(shape) > 0

    def group_for(self, shape: str):
        for g in self.objects:
            if g.shape == shape:
                return g
        return None


def caption_for(scene: Scene) -> str:
    """Fixed caption grammar; every caption is exactly generable."""
    parts = []
    for g in scene.objects:
        if g.count == 1:
            parts.append(f"a {g.color} {g.shape}")
        else:
            parts.append(f"{COUNT_WORDS[g.count]} {g.color} {PLURALS[g.shape]}")
    phrase = " and ".join(parts)
    if scene.background is not None:
        phrase = f"{phrase} on the {scene.background}"
    if scene.style == STYLE_BW:
        phrase = f"a black and white photo of {phrase}"
    return phrase


def render_scene(scene: Scene, size: int = 16,
                 patch_image: np.ndarray | None = None) -> np.ndarray:
    """Deterministic (3, size, size) rendering in model space [-1, 1]."""
    img = np.empty((3, size, size), dtype=np.float32)
    bg = BACKGROUND_RGB[scene.background]
    for c in range(3):
        img[c].fill(bg[c])
    cell = size // 2
    quadrants = [(0, 0), (0, cell), (cell, 0), (cell, cell)]
    slot = 0
    for g in scene.objects:
        mask = glyph_mask(g.shape)
        rgb = COLOR_RGB[g.color]
        for _ in range(g.count):
            if slot >= len(quadrants):
                raise ParameterError("scene has more than four object instances")
            r0, c0 = quadrants[slot]
            off = (cell - mask.shape[0]) // 2
            for c in range(3):
                region = img[c, r0 + off: r0 + off + mask.shape[0],
                             c0 + off: c0 + off + mask.shape[1]]
                region[mask] = rgb[c]
            slot += 1
    if scene.style == STYLE_BW:
        lum = 0.299 * img[0] + 0.587 * img[1] + 0.114 * img[2]
        img = np.stack([lum, lum, lum]).astype(np.float32)
    if scene.patched:
        if patch_image is None:
            patch_image = default_patch_image(max(2, size // 4))
        ph, pw = patch_image.shape[1:]
        img[:, size - ph:, size - pw:] = patch_image
    return np.clip(img, -1.0, 1.0)


def default_patch_image(side: int = 4) -> np.ndarray:
    """Checkerboard patch used as the ImagePatch ground-truth pattern."""
    patch = np.zeros((3, side, side), dtype=np.float32)
    yy, xx = np.mgrid[0:side, 0:side]
    checker = (yy + xx) % 2 == 0
    patch[:, checker] = 0.95
    patch[:, ~checker] = -0.95
    return patch


def image_content_id(pixels) -> str:
    arr = np.ascontiguousarray(np.asarray(pixels, dtype=np.float32))
    return hashlib.sha256(arr.tobytes()).hexdigest()[:16]


class SceneDB:
    """Ground-truth lookup for the oracle judge, keyed by pixel hash."""

    def __init__(self):
        self.scenes: dict[str, Scene] = {}

    def __len__(self) -> int:
        return len(self.scenes)

    def register(self, scene: Scene, pixels) -> str:
        image_id = image_content_id(pixels)
        scene.image_id = image_id
        self.scenes[image_id] = scene
        return image_id

    def lookup(self, image) -> Scene:
        if isinstance(image, str):
            key = image
        else:
            if isinstance(image, torch.Tensor):
                image = image.detach().cpu().numpy()
            key = image_content_id(image)
        if key not in self.scenes:
            raise LookupErrorJudge(f"image {key!r} not in scene database")
        return self.scenes[key]


@dataclass
class SceneSpec:
    n_train: int = 256
    n_eval: int = 64
    image_size: int = 16
    objects: tuple = ("dog", "cat", "bird", "zebra", "car", "house", "tree", "fish")
    colors: tuple = OBJECT_COLORS
    backgrounds: tuple = (None, "grass", "beach", "street", "snow")
    max_count: int = 3
    style_prob: float = 0.15
    second_object_prob: float = 0.2

    def validate(self, vocab: Vocabulary):
        for w in self.objects:
            if w not in vocab or PLURALS[w] not in vocab:
                raise ParameterError(f"object {w!r} outside vocabulary")
        for w in self.colors:
            if w not in vocab:
                raise ParameterError(f"color {w!r} outside vocabulary")
        for w in self.backgrounds:
            if w is not None and w not in vocab:
                raise ParameterError(f"background {w!r} outside vocabulary")


@dataclass
class SyntheticSceneDataset:
    images: ImageBatch
    prompts: list
    captions: list
    scenes: list
    scene_db: SceneDB
    train_indices: list = field(default_factory=list)
    eval_indices: list = field(default_factory=list)

    def subset(self, indices):
        return ([self.prompts[i] for i in indices],
                ImageBatch(self.images.data[list(indices)]))


def sample_scene(rng: np.random.Generator, spec: SceneSpec) -> Scene:
    def draw_group(max_count):
        shape = spec.objects[rng.integers(len(spec.objects))]
        color = spec.colors[rng.integers(len(spec.colors))]
        count = int(rng.integers(1, max_count + 1))
        return ObjectGroup(shape=shape, color=color, count=count)

    groups = [draw_group(spec.max_count)]
    if rng.random() < spec.second_object_prob and groups[0].count < 4:
        extra = draw_group(min(2, 4 - groups[0].count))
        if extra.shape != groups[0].shape:
            groups.append(extra)
    background = spec.backgrounds[rng.integers(len(spec.backgrounds))]
    style = STYLE_BW if rng.random() < spec.style_prob else None
    scene = Scene(objects=groups, background=background, style=style)
    scene.caption = caption_for(scene)
    return scene


def generate_synthetic_dataset(spec: SceneSpec, seed: int,
                               vocab: Vocabulary) -> SyntheticSceneDataset:
    """Render a deterministic corpus with a disjoint train/eval split."""
    spec.validate(vocab)
    rng = np.random.default_rng(seed)
    total = spec.n_train + spec.n_eval
    scene_db = SceneDB()
    images, prompts, captions, scenes = [], [], [], []
    for _ in range(total):
        scene = sample_scene(rng, spec)
        pixels = render_scene(scene, size=spec.image_size)
        scene_db.register(scene, pixels)
        images.append(pixels)
        captions.append(scene.caption)
        prompts.append(tokenize(scene.caption, vocab))
        scenes.append(scene)
    if total == 0:
        data = ImageBatch(torch.zeros(0, 3, spec.image_size, spec.image_size))
        return SyntheticSceneDataset(data, [], [], [], scene_db, [], [])
    data = ImageBatch(torch.from_numpy(np.stack(images)))
    return SyntheticSceneDataset(
        images=data, prompts=prompts, captions=captions, scenes=scenes,
        scene_db=scene_db,
        train_indices=list(range(spec.n_train)),
        eval_indices=list(range(spec.n_train, total)),
    )
