"""Regenerates the synthetic fixtures in this directory.

Run from anywhere: python3 tests/fixtures/make_fixtures.py
"""
import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent


def save_stack(name, arr, layer="synthetic", source=""):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    np.save(HERE / f"{name}.npy", arr)
    meta = {"layer_name": layer, "source_image": source}
    (HERE / f"{name}.meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def save_ppm(name, rgb):
    h, w, _ = rgb.shape
    with open(HERE / name, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(rgb.astype(np.uint8).tobytes())


def save_pgm(name, gray):
    h, w = gray.shape
    with open(HERE / name, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(gray.astype(np.uint8).tobytes())


def save_boxes(name, image, boxes):
    doc = {"image": image, "boxes": boxes}
    (HERE / name).write_text(json.dumps(doc, indent=2) + "\n")


def box(x0, y0, x1, y1, label, score=None):
    b = {"x0": x0, "y0": y0, "x1": x1, "y1": y1, "label": label}
    if score is not None:
        b["score"] = score
    return b


def blob_scene():
    # 64x64 image, stride 8 feature grid. A warm object on a cool background,
    # with activations over the matching cells.
    rng = np.random.default_rng(7)
    h = w = 64
    img = np.empty((h, w, 3), dtype=np.float64)
    img[:] = (40, 70, 160)
    img[16:48, 24:56] = (200, 60, 40)
    img += rng.integers(-6, 7, size=img.shape)
    save_ppm("blob.ppm", np.clip(img, 0, 255))

    truth = np.zeros((h, w), dtype=np.uint8)
    truth[16:48, 24:56] = 255
    save_pgm("blob_truth.pgm", truth)

    # Activations peak on the object's central cells and fade towards its edges.
    stack = np.zeros((4, 8, 8), dtype=np.float32)
    for c in range(4):
        stack[c, 2:6, 3:7] = 0.05 * (c + 1)
        stack[c, 3:5, 4:6] = 1.0 + 0.5 * c
    save_stack("blob", stack, layer="conv5_3", source="blob.ppm")
    save_stack("zeros", np.zeros((4, 8, 8), dtype=np.float32), source="blob.ppm")

    save_boxes("blob_detections.json", "blob.ppm", [
        box(20, 12, 60, 52, "thing", 0.9),
        box(30, 20, 50, 44, "part", 0.8),
    ])


def clean_scene():
    # Heatmap at image resolution: constant blobs, each inside one annotation box,
    # plus three boxes over empty regions.
    h = w = 64
    heat = np.zeros((1, h, w), dtype=np.float32)
    blobs = [
        ((2, 2, 8, 9), 8.0),
        ((14, 3, 19, 7), 7.0),
        ((27, 2, 35, 10), 6.0),
        ((3, 20, 10, 24), 5.0),
        ((20, 18, 26, 27), 4.0),
        ((40, 16, 46, 22), 3.0),
        ((8, 40, 14, 47), 2.0),
    ]
    for (x0, y0, x1, y1), v in blobs:
        heat[0, y0:y1, x0:x1] = v
    save_stack("clean", heat, source="clean.ppm")

    boxes = [
        box(0, 0, 11, 12, "a", 0.95),
        box(12, 1, 22, 10, "b"),
        box(27, 2, 35, 10, "c", 0.5),
        box(1, 17, 12, 27, "d"),
        box(17, 15, 30, 30, "e"),
        box(37, 13, 50, 25, "f"),
        box(5, 37, 17, 50, "g"),
        box(50, 50, 62, 62, "empty"),
        box(30, 40, 45, 60, "empty"),
        box(52, 2, 63, 12, "empty"),
    ]
    save_boxes("clean_annotations.json", "clean.ppm", boxes)
    tight = [box(x0, y0, x1, y1, b["label"], b.get("score")) for ((x0, y0, x1, y1), _), b in zip(blobs, boxes)]
    save_boxes("clean_expected.json", "clean.ppm", tight)


def propose_scene():
    h = w = 32
    heat = np.zeros((1, h, w), dtype=np.float32)
    rects = [(2, 3, 10, 9), (18, 4, 24, 8), (6, 20, 9, 29), (22, 22, 30, 30)]
    for i, (x0, y0, x1, y1) in enumerate(rects):
        heat[0, y0:y1, x0:x1] = 10.0 - i
    save_stack("propose", heat, source="propose.ppm")
    save_boxes("propose_truth.json", "propose.ppm", [box(*r, "object") for r in rects])


def misc():
    save_stack("scalar", np.full((1, 1, 1), 3.5, dtype=np.float32))
    rng = np.random.default_rng(11)
    save_stack("wide", rng.random((8, 14, 14), dtype=np.float32), layer="conv5_3", source="wide.ppm")
    np.save(HERE / "fortran.npy", np.asfortranarray(np.arange(24, dtype="<f4").reshape(2, 3, 4)))
    np.save(HERE / "float64.npy", np.zeros((1, 2, 2), dtype="<f8"))


if __name__ == "__main__":
    blob_scene()
    clean_scene()
    propose_scene()
    misc()
