"""Regenerate the bundled face-detection fixtures.

Two artifacts are produced:

- src/moodtunes/assets/haarcascade_frontalface.xml: the public stump-based
  frontal-face cascade, reconstructed from the JSON mirror shipped in the
  `tracking` npm package (tracking@1.1.3, assets/opencv_haarcascade_frontalface_alt.js).
  Values are carried over verbatim, so the XML is numerically identical to
  the widely published original.
- tests/fixtures/portrait.png + portrait_face.json: a public-domain test
  portrait (scikit-image's astronaut sample) with a face box produced by
  scikit-image's own LBP cascade detector, used as the reference
  annotation for detection tests.

Both outputs are committed; this script only needs rerunning if the
sources change.
"""

import argparse
import json
import pathlib
from xml.sax.saxutils import escape

REPO = pathlib.Path(__file__).resolve().parent.parent
CASCADE_OUT = REPO / "src" / "moodtunes" / "assets" / "haarcascade_frontalface.xml"
PORTRAIT_OUT = REPO / "tests" / "fixtures" / "portrait.png"
ANNOTATION_OUT = REPO / "tests" / "fixtures" / "portrait_face.json"


def load_tracking_js(path):
    """The tracking.js asset is `var name = {json};` - strip to the JSON."""
    src = pathlib.Path(path).read_text(encoding="utf-8")
    return json.loads(src[src.index("{"): src.rindex("}") + 1])


def cascade_xml(data):
    if data.get("type_id") != "opencv-haar-classifier":
        raise SystemExit(f"unexpected type_id {data.get('type_id')!r}")
    lines = []
    push = lines.append
    push('<?xml version="1.0"?>')
    push("<opencv_storage>")
    push('<haarcascade_frontalface type_id="opencv-haar-classifier">')
    push(f"  <size>{escape(data['size'])}</size>")
    push("  <stages>")
    for stage in data["stages"]:
        push("    <_>")
        push("      <trees>")
        for tree in stage["trees"]:
            push("        <_>")
            for node in tree:
                push("          <_>")
                push("            <feature>")
                push("              <rects>")
                for rect in node["feature"]["rects"]:
                    push(f"                <_>{escape(rect)}</_>")
                push("              </rects>")
                push(f"              <tilted>{escape(node['feature']['tilted'])}</tilted>")
                push("            </feature>")
                push(f"            <threshold>{escape(node['threshold'])}</threshold>")
                push(f"            <left_val>{escape(node['left_val'])}</left_val>")
                push(f"            <right_val>{escape(node['right_val'])}</right_val>")
                push("          </_>")
            push("        </_>")
        push("      </trees>")
        push(f"      <stage_threshold>{escape(stage['stage_threshold'])}</stage_threshold>")
        push(f"      <parent>{escape(stage['parent'])}</parent>")
        push(f"      <next>{escape(stage['next'])}</next>")
        push("    </_>")
    push("  </stages>")
    push("</haarcascade_frontalface>")
    push("</opencv_storage>")
    push("")
    return "\n".join(lines)


def build_cascade(js_path):
    data = load_tracking_js(js_path)
    n_stages = len(data["stages"])
    n_stumps = sum(len(t) for s in data["stages"] for t in s["trees"])
    CASCADE_OUT.parent.mkdir(parents=True, exist_ok=True)
    CASCADE_OUT.write_text(cascade_xml(data), encoding="utf-8")
    print(f"wrote {CASCADE_OUT} ({n_stages} stages, {n_stumps} stumps)")


def build_portrait():
    import numpy as np
    from PIL import Image
    from skimage import data as skdata
    from skimage.feature import Cascade

    rgb = skdata.astronaut()
    PORTRAIT_OUT.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(rgb).save(PORTRAIT_OUT)

    detector = Cascade(skdata.lbp_frontal_face_cascade_filename())
    found = detector.detect_multi_scale(
        img=np.mean(rgb, axis=2), scale_factor=1.2, step_ratio=1,
        min_size=(60, 60), max_size=(200, 200),
    )
    if len(found) != 1:
        raise SystemExit(f"expected exactly one reference detection, got {found}")
    box = found[0]
    annotation = {
        "x": int(box["c"]), "y": int(box["r"]),
        "w": int(box["width"]), "h": int(box["height"]),
        "source": "scikit-image LBP frontal-face cascade on the astronaut sample",
    }
    ANNOTATION_OUT.write_text(json.dumps(annotation, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {PORTRAIT_OUT} and {ANNOTATION_OUT}: {annotation}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cascade-js", help="path to opencv_haarcascade_frontalface_alt.js")
    ap.add_argument("--portrait", action="store_true", help="rebuild the portrait fixture")
    args = ap.parse_args()
    if not args.cascade_js and not args.portrait:
        ap.error("nothing to do: pass --cascade-js and/or --portrait")
    if args.cascade_js:
        build_cascade(args.cascade_js)
    if args.portrait:
        build_portrait()


if __name__ == "__main__":
    main()
