import csv
import json

import numpy as np

from maxdisk import export
from maxdisk.polygon import Polygon
from maxdisk.weierstrass import flat_disk


def test_json_numpy_and_complex(tmp_path):
    p = export.write_json(tmp_path / "a" / "r.json",
                          {"v": np.arange(3), "x": np.float64(0.5), "z": 1 + 2j, "ok": np.bool_(True)})
    assert json.loads(p.read_text()) == {"ok": True, "v": [0, 1, 2], "x": 0.5, "z": [1.0, 2.0]}


def test_obj_mesh_and_sidecar(tmp_path):
    P = Polygon.square(1.0)
    X = flat_disk(P, (0, 0, -2.0))
    export.write_obj(tmp_path / "m.obj", X, P, resolution=8)
    lines = (tmp_path / "m.obj").read_text().splitlines()
    verts = [ln for ln in lines if ln.startswith("v ")]
    faces = [ln for ln in lines if ln.startswith("f ")]
    assert len(verts) == 64 and len(faces) == 2 * 49
    idx = np.array([[int(t) for t in ln.split()[1:]] for ln in faces])
    assert idx.min() == 1 and idx.max() == 64
    # the flat disk sits at height -2
    assert np.allclose([float(ln.split()[3]) for ln in verts], -2.0)
    with open(tmp_path / "m.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 64


def test_svg(tmp_path):
    sq = Polygon.square(1.0)
    p = export.write_svg(tmp_path / "s.svg", [(sq, "black"), (sq.inward_offset(0.1), "blue")],
                         segments=[(0j, 0.5 + 0j, "red")])
    text = p.read_text()
    assert text.startswith("<svg") and text.count("<polygon") == 2 and text.count("<line") == 1
