import hashlib
import json
import shutil
from pathlib import Path

import pytest

from lduo_figures import HashMismatchError, render
from lduo_figures.cli import main
from lduo_figures.render import FigureSpec

DATA = Path(__file__).parent / "data"


def sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_bathcoords_panel_grid(tmp_path):
    spec = FigureSpec(in_dir=DATA / "bathcoords", out_dir=tmp_path,
                      kind="bathcoords")
    written = render(spec)
    names = {p.name for p in written}
    assert "bathcoords_order1.png" in names
    assert "bathcoords_order2.svg" in names
    for p in written:
        assert p.stat().st_size > 1000


def test_spectra2d_three_panel_series(tmp_path):
    spec = FigureSpec(in_dir=DATA / "spectra2d", out_dir=tmp_path,
                      kind="spectra2d")
    written = render(spec)
    names = {p.name for p in written}
    assert {"spectrum_T0.png", "spectrum_T24.png", "spectrum_T48.png",
            "spectrum_T0.svg", "spectrum_T24.svg", "spectrum_T48.svg"} <= names


def test_golden_hash_pins(tmp_path):
    """PNG hashes pinned for the library version the pins were taken on."""
    import matplotlib

    pins = json.loads((Path(__file__).parent / "golden_hashes.json").read_text())
    if pins["matplotlib"] != matplotlib.__version__:
        pytest.skip(f"pins taken on matplotlib {pins['matplotlib']}, "
                    f"running {matplotlib.__version__}")
    out = {}
    for kind, src in (("spectra2d", "spectra2d"), ("bathcoords", "bathcoords")):
        for p in render(FigureSpec(in_dir=DATA / src, out_dir=tmp_path / kind,
                                   kind=kind)):
            if p.suffix == ".png":
                out[p.name] = sha(p)
    assert out == pins["png_sha256"]


def test_lattice_sketch(tmp_path):
    spec = FigureSpec(in_dir=DATA / "bathcoords", out_dir=tmp_path,
                      kind="lattice")
    written = render(spec)
    assert {p.name for p in written} == {"lattice.png", "lattice.svg"}
    # png magic bytes
    png = next(p for p in written if p.suffix == ".png")
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_lattice_pyramid_20_nodes(tmp_path):
    """3-axis depth-3 pyramid: all 20 lattice points drawn."""
    rows = (DATA / "pyramid" / "lattice.jsonl").read_text().splitlines()
    assert len(rows) == 20
    spec = FigureSpec(in_dir=DATA / "pyramid", out_dir=tmp_path,
                      kind="lattice")
    written = render(spec)
    assert {p.name for p in written} == {"lattice.png", "lattice.svg"}


@pytest.mark.parametrize("kind,src", [("bathcoords", "bathcoords"),
                                      ("lattice", "bathcoords"),
                                      ("spectra2d", "spectra2d")])
def test_rendering_is_byte_stable(tmp_path, kind, src):
    """Re-rendering the same golden inputs is byte-identical."""
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        render(FigureSpec(in_dir=DATA / src, out_dir=out, kind=kind))
    for pa in sorted(a.iterdir()):
        pb = b / pa.name
        assert sha(pa) == sha(pb), pa.name


def test_rendering_is_read_only(tmp_path):
    src = tmp_path / "inputs"
    shutil.copytree(DATA / "bathcoords", src)
    before = {p.name: sha(p) for p in src.iterdir()}
    render(FigureSpec(in_dir=src, out_dir=tmp_path / "out", kind="bathcoords"))
    after = {p.name: sha(p) for p in src.iterdir()}
    assert before == after


def test_hash_mismatch_refused(tmp_path):
    src = tmp_path / "inputs"
    shutil.copytree(DATA / "bathcoords", src)
    path = src / "bathcoords_full_1.csv"
    path.write_text(path.read_text() + "# tampered\n")
    with pytest.raises(HashMismatchError):
        render(FigureSpec(in_dir=src, out_dir=tmp_path / "out",
                          kind="bathcoords"))


def test_cli_end_to_end(tmp_path, capsys):
    rc = main(["lattice", "--in", str(DATA / "bathcoords"),
               "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert any(line.endswith("lattice.png") for line in out)


def test_cli_refuses_tampered_inputs(tmp_path, capsys):
    src = tmp_path / "inputs"
    shutil.copytree(DATA / "spectra2d", src)
    doc = json.loads((src / "axes.json").read_text())
    doc["tampered"] = True
    (src / "axes.json").write_text(json.dumps(doc))
    rc = main(["spectra2d", "--in", str(src), "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "refusing" in capsys.readouterr().err
