#!/usr/bin/env python3
"""Regenerate the local fixture journal under tests/fixtures/journal.

Every figure is authored once below as a layout: panel boxes, classes, labels,
dependents, insets, scale bars and the caption text each panel should receive.
From that single description this script writes the figure PNGs, the detector
output (detections/), the human annotation (groundtruth/), the journal HTML and
the expected counts used by the end-to-end tests.

    python3 tests/fixtures/make_fixture.py
"""

import json
import math
import random
import re
import shutil
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont

ROOT = Path(__file__).resolve().parent / "journal"
UNIT_NM = {"nm": 1.0, "µm": 1000.0, "um": 1000.0, "Å": 0.1, "mm": 1e6}


def box(x0, y0, x1, y1):
    return {"x0": x0, "y0": y0, "x1": x1, "y1": y1}


def union(a, b):
    return box(min(a["x0"], b["x0"]), min(a["y0"], b["y0"]), max(a["x1"], b["x1"]), max(a["y1"], b["y1"]))


def slug(doi):
    return re.sub(r"[^0-9a-z]+", "-", doi.lower()).strip("-")


def scores(top, p, rest="unclear"):
    return {top: p, rest: round(1.0 - p, 6)}


def label_box(unit):
    return box(unit["x0"] + 4, unit["y0"] + 4, unit["x0"] + 24, unit["y0"] + 22)


def scale_bar(unit, text, length=50, confidence=0.9):
    x1, y1 = unit["x1"] - 12, unit["y1"] - 12
    line = box(x1 - length, y1 - 4, x1, y1)
    lab = box(x1 - length, y1 - 22, x1, y1 - 8)
    return {"line": line, "label": lab, "text": text, "confidence": confidence}


def panel(unit, cls, sc, sid=None, label_text=None, segment=None, keywords=(), category=None, **extra):
    """One master image as authored. `segment` is the caption text the panel should get."""
    p = {
        "unit": unit,
        "class": cls,
        "scores": sc,
        "id": sid,
        "label_text": label_text if label_text is not None else sid,
        "segment": segment,
        "keywords": list(keywords),
        "category": category,
        "loose_dependents": extra.get("loose_dependents", []),
        "nested_dependents": extra.get("nested_dependents", []),
        "insets": extra.get("insets", []),
        "small_masters": extra.get("small_masters", []),
        "scale": extra.get("scale"),
    }
    if p["category"] is None:
        if segment is None:
            p["category"] = "caption_unassigned"
        else:
            p["category"] = ("label_unassigned", "single_label", "multi_label")[min(len(keywords), 2)]
    return p


def grid(cols, rows, w, h, gutter=20, margin=10):
    cells = []
    for r in range(rows):
        for c in range(cols):
            x0 = margin + c * (w + gutter)
            y0 = margin + r * (h + gutter)
            cells.append(box(x0, y0, x0 + w, y0 + h))
    size = (margin * 2 + cols * w + (cols - 1) * gutter, margin * 2 + rows * h + (rows - 1) * gutter)
    return cells, size


MICRO = scores("microscopy", 0.995)
MICRO_LOW = scores("microscopy", 0.93)
GRAPH = scores("graph", 0.998, "illustration")

# ---------------------------------------------------------------------------- articles

TABLE1 = ("(a) and (b) TEM images of 1.93 wt% Ru-WSe<sub>2</sub>. (c) HRTEM image of 1.93 wt% Ru-WSe<sub>2</sub>. "
          "(d) and (e) The enlarged area denoted in (c) corresponds to the HRTEM images of WSe<sub>2</sub>. "
          "(f) HAADF-STEM image of 1.93 wt% Ru-WSe<sub>2</sub>. (g-i) The EDS mapping of Ru, W, and Se, respectively.")


def a1_figures():
    cells, size = grid(3, 3, 200, 150)
    a, b, c, d, e, f, g, h, i = cells
    ru = "TEM images of 1.93 wt% Ru-WSe2"
    fig1 = {
        "size": size,
        "caption_html": TABLE1,
        "panels": [
            panel(a, "microscopy", MICRO, "a", segment=ru, keywords=["tem"], scale=scale_bar(a, "50 nm")),
            panel(b, "microscopy", MICRO, "b", segment=ru, keywords=["tem"]),
            panel(c, "microscopy", MICRO, "c", label_text="(c)", segment="HRTEM image of 1.93 wt% Ru-WSe2",
                  scale=scale_bar(c, "5 nm", length=40)),
            panel(d, "microscopy", MICRO_LOW, "d",
                  segment="The enlarged area denoted in (c) corresponds to the HRTEM images of WSe2"),
            panel(e, "microscopy", MICRO_LOW, "e",
                  segment="The enlarged area denoted in (c) corresponds to the HRTEM images of WSe2"),
            panel(f, "microscopy", MICRO, "f", segment="HAADF-STEM image of 1.93 wt% Ru-WSe2",
                  scale=scale_bar(f, "100 nm", length=60)),
            panel(g, "microscopy", MICRO, "g", segment="The EDS mapping of Ru"),
            panel(h, "microscopy", MICRO, "h", segment="The EDS mapping of W"),
            panel(i, "microscopy", MICRO, "i", segment="The EDS mapping of Se"),
        ],
    }
    # Fig 2 style: the labelled unit "b" sits beside two unlabelled companions.
    unit_b = box(250, 10, 390, 250)
    fig2 = {
        "size": (700, 260),
        "caption_html": "(a) Polarization curves of Ru-WSe<sub>2</sub> nanosheets. "
                        "(b) TEM images of Ru-WSe<sub>2</sub> nanosheets at increasing magnification.",
        "panels": [
            panel(box(10, 10, 230, 250), "graph", GRAPH, "a", segment="Polarization curves of Ru-WSe2 nanosheets",
                  keywords=["nanosheet"]),
            panel(unit_b, "parent", {"parent": 0.7, "microscopy": 0.3}, "b",
                  segment="TEM images of Ru-WSe2 nanosheets at increasing magnification",
                  keywords=["tem", "nanosheet"],
                  loose_dependents=[box(400, 10, 540, 250), box(550, 10, 690, 250)],
                  scale=scale_bar(unit_b, "200 nm", length=80)),
        ],
    }
    cells, size = grid(3, 1, 220, 200)
    a, b, c = cells
    fig3 = {
        "size": size,
        "caption_html": "(a) TEM image of Ru-WSe<sub>2</sub> nanosheets with the corresponding SAED pattern (inset). "
                        "(b) SAED pattern of a single nanosheet. (c) XRD patterns of WSe<sub>2</sub> and Ru-WSe<sub>2</sub>.",
        "panels": [
            panel(a, "microscopy", MICRO, "a",
                  segment="TEM image of Ru-WSe2 nanosheets with the corresponding SAED pattern (inset)",
                  keywords=["tem", "nanosheet"],
                  insets=[box(a["x1"] - 64, a["y0"] + 6, a["x1"] - 6, a["y0"] + 64)],
                  scale=scale_bar(a, "20 nm")),
            panel(b, "diffraction", scores("diffraction", 0.999, "microscopy"), "b",
                  segment="SAED pattern of a single nanosheet", keywords=["nanosheet"]),
            panel(c, "graph", GRAPH, "c", segment="XRD patterns of WSe2 and Ru-WSe2"),
        ],
    }
    return [fig1, fig2, fig3]


def a2_figures():
    cells, size = grid(2, 1, 260, 220)
    a, b = cells
    fig1 = {
        "size": size,
        "caption_html": "<b>Figure 1.</b> Structure of the particles. (a) TEM image of Au nanoparticles. "
                        "(b) Size distribution of the nanoparticles.",
        "panels": [
            panel(a, "microscopy", MICRO, "a", segment="TEM image of Au nanoparticles",
                  keywords=["tem", "nanoparticle"], scale=scale_bar(a, "10 nm", length=45)),
            panel(b, "graph", GRAPH, "b", segment="Size distribution of the nanoparticles",
                  keywords=["nanoparticle"]),
        ],
    }
    cells, size = grid(3, 1, 180, 180)
    a, b, c = cells
    fig2 = {
        "size": size,
        "caption_html": "(a) Photograph of the colloidal solution. (b) Schematic illustration of the synthesis route.",
        "panels": [
            panel(a, "photo", scores("photo", 0.97, "illustration"), "a",
                  segment="Photograph of the colloidal solution"),
            panel(b, "illustration", scores("illustration", 0.995, "graph"), "b",
                  segment="Schematic illustration of the synthesis route"),
            panel(c, "graph", GRAPH, None),
        ],
    }
    cells, size = grid(2, 1, 240, 200)
    a, b = cells
    fig3 = {
        "size": size,
        "caption_html": None,  # the page has no caption for this figure
        "panels": [
            panel(a, "microscopy", MICRO, "a", scale=scale_bar(a, "100 nm", confidence=0.1)),
            panel(b, "microscopy", MICRO, "b"),
        ],
    }
    return [fig1, fig2, fig3]


def a3_figures():
    cells, size = grid(3, 1, 200, 200)
    a, b, c = cells
    seg = "TEM images of Ag nanowires at different magnifications"
    fig1 = {
        "size": size,
        "caption_html": "(a&#8211;c) TEM images of Ag nanowires at different magnifications.",
        "panels": [
            panel(a, "microscopy", MICRO, "a", segment=seg, keywords=["tem", "nanowire"],
                  scale=scale_bar(a, "1 µm", length=64)),
            panel(b, "microscopy", MICRO, "b", segment=seg, keywords=["tem", "nanowire"],
                  scale=scale_bar(b, "500 nm", length=75)),
            panel(c, "microscopy", MICRO, "c", segment=seg, keywords=["tem", "nanowire"],
                  scale=scale_bar(c, "50 Å", length=30)),
        ],
    }
    cells, size = grid(2, 1, 260, 200)
    a, b = cells
    fig2 = {
        "size": size,
        "caption_html": "(a) HAADF-STEM image of a single nanowire. (b) EDS line profile across the nanowire.",
        "panels": [
            panel(a, "microscopy", MICRO, "a", segment="HAADF-STEM image of a single nanowire",
                  keywords=["nanowire"], scale=scale_bar(a, "2 um", length=50)),
            panel(b, "graph", GRAPH, "b", segment="EDS line profile across the nanowire", keywords=["nanowire"],
                  insets=[box(b["x1"] - 80, b["y0"] + 8, b["x1"] - 8, b["y0"] + 68)]),
        ],
    }
    return [fig1, fig2]


def a4_figures():
    cells, size = grid(3, 1, 200, 240)
    a, b, c = cells
    seg = "AFM images of MoS2 nanosheets"
    fig1 = {
        "size": size,
        "caption_html": "(a) and (b) AFM images of MoS<sub>2</sub> nanosheets. (c) Height profile along the line in (b).",
        "panels": [
            panel(a, "microscopy", MICRO, "a", segment=seg, keywords=["nanosheet"]),
            panel(b, "microscopy", MICRO, "b", segment=seg, keywords=["nanosheet"]),
            # Two stacked plots under one label: the detector reports the lower one as a sub-unit.
            panel(c, "parent", GRAPH, "c", segment="Height profile along the line in (b)",
                  nested_dependents=[box(c["x0"], c["y0"] + 130, c["x1"], c["y1"])]),
        ],
    }
    cells, size = grid(3, 1, 200, 180)
    a, b, c = cells
    fig2 = {
        "size": size,
        "caption_html": "(a) Raman spectra of the nanosheets. (b) Photoluminescence spectra of monolayer flakes. "
                        "(d) Optical image of the substrate.",
        "orphans": ["d"],
        "panels": [
            panel(a, "graph", GRAPH, "a", segment="Raman spectra of the nanosheets", keywords=["nanosheet"]),
            panel(b, "graph", scores("graph", 0.9, "illustration"), "b",
                  segment="Photoluminescence spectra of monolayer flakes"),
            panel(c, "photo", scores("photo", 0.992, "microscopy"), "c"),
        ],
    }
    return [fig1, fig2]


def a5_figures():
    cells, size = grid(2, 2, 220, 180, margin=40)
    a, b, c, d = cells
    fig1 = {
        "size": size,
        "caption_html": "(a) TEM image of Pt nanoparticles on carbon. (b) HRTEM image of a Pt nanoparticle. "
                        "(c) Electron diffraction pattern of the Pt nanoparticles. (d) Particle size histogram.",
        # A stray label in the margin that belongs to no panel.
        "stray_labels": [{"box": box(6, 6, 26, 26), "text": "e"}],
        "panels": [
            panel(a, "microscopy", MICRO, "a", segment="TEM image of Pt nanoparticles on carbon",
                  keywords=["tem", "nanoparticle"],
                  small_masters=[box(a["x1"] - 70, a["y1"] - 70, a["x1"] - 10, a["y1"] - 10)],
                  scale=None),
            panel(b, "microscopy", MICRO, "b", segment="HRTEM image of a Pt nanoparticle",
                  keywords=["nanoparticle"], scale=scale_bar(b, "2 nm", length=40)),
            # Scored "parent" by the detector but with nothing attached: falls back.
            panel(c, "diffraction", {"parent": 0.6, "diffraction": 0.4}, "c",
                  segment="Electron diffraction pattern of the Pt nanoparticles", keywords=["nanoparticle"]),
            panel(d, "graph", GRAPH, "d", segment="Particle size histogram"),
        ],
    }
    cells, size = grid(2, 1, 240, 200)
    a, b = cells
    fig2 = {
        "size": size,
        "caption_html": "(a) Cyclic voltammograms of Pt nanoparticles. (b) Schematic of the electrode.",
        "panels": [
            panel(a, "graph", scores("graph", 0.95, "illustration"), "a",
                  segment="Cyclic voltammograms of Pt nanoparticles", keywords=["nanoparticle"]),
            panel(b, "illustration", scores("illustration", 0.999, "photo"), "b", segment="Schematic of the electrode"),
        ],
    }
    return [fig1, fig2]


ARTICLES = [
    {
        "page": "a1.html",
        "doi": "10.5555/fx.2021.001",
        "title": "Ruthenium-doped WSe2 nanosheets for the hydrogen evolution reaction",
        "abstract": "Ruthenium doping activates the basal plane of tungsten diselenide nanosheets. Electron "
                    "microscopy shows uniform dopant dispersion and the catalyst reaches low overpotential for "
                    "hydrogen evolution in acidic electrolyte.",
        "introduction": "Layered transition metal dichalcogenides are promising catalysts for hydrogen "
                        "evolution. Their activity is limited by inert basal planes, which doping can activate.",
        "figures": a1_figures(),
    },
    {
        "page": "a2.html",
        "doi": "10.5555/fx.2021.002",
        "title": "Seed-mediated growth of monodisperse gold nanoparticles",
        "abstract": "Gold nanoparticles with narrow size distribution are grown from citrate seeds. Particle "
                    "size is tuned by the seed to precursor ratio and measured by transmission electron microscopy.",
        "introduction": "Colloidal gold is widely used in sensing and catalysis, where particle size controls "
                        "optical response.",
        "figures": a2_figures(),
    },
    {
        "page": "a3.html",
        "doi": "10.5555/fx.2022.003",
        "title": "Polyol synthesis of silver nanowires for transparent electrodes",
        "abstract": "Silver nanowires with high aspect ratio are synthesized by a polyol route. Networks of the "
                    "nanowires form transparent conductive electrodes with low sheet resistance.",
        "introduction": "Transparent electrodes based on metal nanowires offer flexibility that oxide films lack.",
        "figures": a3_figures(),
    },
    {
        "page": "a4.html",
        "doi": "10.5555/fx.2022.004",
        "title": "Exfoliated MoS2 nanosheets with tunable thickness",
        "abstract": "Liquid phase exfoliation yields molybdenum disulfide nanosheets whose thickness is set by "
                    "centrifugation speed. Raman and photoluminescence spectra track the layer number.",
        "introduction": "Two-dimensional semiconductors show thickness dependent band gaps.",
        "figures": a4_figures(),
    },
    {
        "page": "a5.html",
        "doi": "10.5555/fx.2023.005",
        "title": "Carbon-supported platinum nanoparticles for oxygen reduction",
        "abstract": "Platinum nanoparticles dispersed on carbon black catalyse oxygen reduction. Electron "
                    "diffraction confirms the face centred cubic structure of the particles.",
        "introduction": "Fuel cell cathodes rely on dispersed platinum catalysts.",
        "figures": a5_figures(),
    },
]

PAYWALLED = {
    "page": "p1.html",
    "doi": "10.5555/fx.2021.099",
    "title": "Subscription-only study of iron oxide nanoparticles",
}

QUERY = {
    "name": "fixture-nanomaterials",
    "journal_family": "fixture",
    "article_limit": 6,
    "sort_order": "relevance",
    "keyword_families": [["tem"], ["nanoparticle", "nanowire", "nanosheet"]],
    "open_access_only": True,
    "high_confidence_threshold": 0.99,
    "scale_label_confidence_threshold": 0.2,
    "topic_confidence_threshold": 0.8,
}

# Rank order after merging the three searches (best rank, then search order), with
# the paywalled p1 filtered out and x1 beyond the article limit.
ARTICLE_ORDER = ["a1.html", "a3.html", "a5.html", "a2.html", "a4.html"]

# Search result pages: article pages in journal ranking order.
SEARCHES = {
    "tem nanoparticle": ("nanoparticle.html", ["a1.html", "a2.html", "p1.html"]),
    "tem nanowire": ("nanowire.html", ["a3.html", "a1.html", "a4.html"]),
    "tem nanosheet": ("nanosheet.html", ["a5.html", "a2.html", "x1.html"]),
}

# ---------------------------------------------------------------------------- drawing


def draw_panel(img, draw, unit, cls, rng):
    x0, y0, x1, y1 = unit["x0"], unit["y0"], unit["x1"], unit["y1"]
    if cls in ("microscopy", "parent"):
        draw.rectangle([x0, y0, x1 - 1, y1 - 1], fill=(70, 70, 70))
        for _ in range((x1 - x0) * (y1 - y0) // 400):
            cx, cy, r = rng.randrange(x0, x1), rng.randrange(y0, y1), rng.randrange(2, 7)
            v = rng.randrange(120, 230)
            draw.ellipse([max(x0, cx - r), max(y0, cy - r), min(x1 - 1, cx + r), min(y1 - 1, cy + r)], fill=(v, v, v))
    elif cls == "diffraction":
        draw.rectangle([x0, y0, x1 - 1, y1 - 1], fill=(5, 5, 5))
        cx, cy = (x0 + x1) // 2, (y0 + y1) // 2
        for ring in (20, 40, 60, 80):
            for k in range(12):
                ang = k * 3.14159265 / 6
                px, py = cx + int(ring * math.cos(ang)), cy + int(ring * math.sin(ang))
                if x0 + 3 < px < x1 - 3 and y0 + 3 < py < y1 - 3:
                    draw.ellipse([px - 2, py - 2, px + 2, py + 2], fill=(250, 250, 250))
    elif cls == "graph":
        draw.rectangle([x0, y0, x1 - 1, y1 - 1], fill=(252, 252, 252), outline=(180, 180, 180))
        draw.line([x0 + 20, y1 - 20, x1 - 10, y1 - 20], fill=(0, 0, 0), width=2)
        draw.line([x0 + 20, y0 + 10, x0 + 20, y1 - 20], fill=(0, 0, 0), width=2)
        pts, y = [], (y0 + y1) // 2
        for x in range(x0 + 22, x1 - 10, 6):
            y = max(y0 + 12, min(y1 - 22, y + rng.randrange(-8, 9)))
            pts.append((x, y))
        draw.line(pts, fill=(200, 30, 30), width=2)
    elif cls == "illustration":
        draw.rectangle([x0, y0, x1 - 1, y1 - 1], fill=(225, 240, 255))
        for _ in range(5):
            a, b = rng.randrange(x0, x1 - 20), rng.randrange(y0, y1 - 20)
            draw.rectangle([a, b, a + 18, b + 18], fill=(rng.randrange(256), rng.randrange(256), 200))
    elif cls == "photo":
        for yy in range(y0, y1):
            t = (yy - y0) / max(1, y1 - y0)
            draw.line([x0, yy, x1 - 1, yy], fill=(int(120 + 100 * t), int(90 + 60 * t), 60))


def render(fig, path, rng):
    w, h = fig["size"]
    img = Image.new("RGB", (w, h), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    font = ImageFont.load_default()
    for p in fig["panels"]:
        draw_panel(img, draw, p["unit"], p["class"], rng)
        for d in p["loose_dependents"]:
            draw_panel(img, draw, d, p["class"], rng)
        for d in p["nested_dependents"]:
            draw_panel(img, draw, d, "graph", rng)
        for i in p["insets"] + p["small_masters"]:
            draw_panel(img, draw, i, "diffraction", rng)
        if p["id"]:
            lb = label_box(p["unit"])
            draw.rectangle([lb["x0"], lb["y0"], lb["x1"] - 1, lb["y1"] - 1], fill=(255, 255, 255))
            draw.text((lb["x0"] + 6, lb["y0"] + 3), p["id"], fill=(0, 0, 0), font=font)
        if p["scale"]:
            s = p["scale"]
            ln, lab = s["line"], s["label"]
            draw.rectangle([ln["x0"], ln["y0"], ln["x1"] - 1, ln["y1"] - 1], fill=(255, 255, 255))
            draw.text((lab["x0"] + 2, lab["y0"]), s["text"].replace("µ", "u").replace("Å", "A"),
                      fill=(255, 255, 255), font=font)
    for s in fig.get("stray_labels", []):
        b = s["box"]
        draw.text((b["x0"] + 6, b["y0"] + 3), s["text"], fill=(0, 0, 0), font=font)
    img.save(path, optimize=False)


# ---------------------------------------------------------------------------- records


def detections_for(fig_id, fig):
    out = []
    for p in fig["panels"]:
        out.append({"box": p["unit"], "kind": "master_candidate", "confidence": 0.97, "class_scores": p["scores"]})
        for d in p["loose_dependents"]:
            out.append({"box": d, "kind": "dependent_candidate", "confidence": 0.9,
                        "class_scores": {"microscopy": 0.8, "unclear": 0.2}})
        for d in p["nested_dependents"]:
            out.append({"box": d, "kind": "dependent_candidate", "confidence": 0.9,
                        "class_scores": {"graph": 0.9, "unclear": 0.1}})
        for i in p["insets"]:
            out.append({"box": i, "kind": "inset_candidate", "confidence": 0.88,
                        "class_scores": {"diffraction": 0.9, "unclear": 0.1}})
        for i in p["small_masters"]:
            out.append({"box": i, "kind": "master_candidate", "confidence": 0.8,
                        "class_scores": {"diffraction": 0.7, "microscopy": 0.3}})
        if p["id"]:
            out.append({"box": label_box(p["unit"]), "kind": "subfigure_label", "confidence": 0.95,
                        "text": p["label_text"]})
        if p["scale"]:
            s = p["scale"]
            out.append({"box": s["line"], "kind": "scale_bar_line", "confidence": 0.93})
            out.append({"box": s["label"], "kind": "scale_bar_label", "confidence": s["confidence"], "text": s["text"]})
    for s in fig.get("stray_labels", []):
        out.append({"box": s["box"], "kind": "subfigure_label", "confidence": 0.6, "text": s["text"]})
    w, h = fig["size"]
    return {"figure_id": fig_id, "image_width": w, "image_height": h, "detections": out}


def master_box(p):
    b = p["unit"]
    for d in p["loose_dependents"]:
        b = union(b, d)
    return b


def groundtruth_for(fig_id, fig):
    masters = []
    for p in fig["panels"]:
        bars = []
        if p["scale"]:
            s = p["scale"]
            ln = s["line"]
            bars.append({"line_box": ln, "length_px": max(ln["x1"] - ln["x0"], ln["y1"] - ln["y0"]),
                         "label_text": s["text"], "label_box": s["label"]})
        masters.append({
            "box": master_box(p),
            "subfigure_id": p["id"],
            "label_box": label_box(p["unit"]) if p["id"] else None,
            "class": p["class"],
            "dependents": p["loose_dependents"] + p["nested_dependents"],
            "insets": p["insets"] + p["small_masters"],
            "scale_bars": bars,
        })
    w, h = fig["size"]
    return {"figure_id": fig_id, "image_width": w, "image_height": h, "masters": masters}


def expected_scale(p):
    """nm per pixel by hand: magnitude x unit size / bar length; None when the label is unusable."""
    s = p["scale"]
    if not s or s["confidence"] < QUERY["scale_label_confidence_threshold"]:
        return None
    mag, unit = s["text"].split(" ")
    ln = s["line"]
    px = max(ln["x1"] - ln["x0"], ln["y1"] - ln["y0"])
    return {"bar_length_px": px, "nm_per_pixel": float(mag) * UNIT_NM[unit] / px, "label_text": s["text"]}


def caption_text(html):
    text = re.sub(r"<[^>]+>", "", html).replace("&#8211;", "–")
    return text


def article_html(art, figs, slug_):
    parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset=\"utf-8\">",
        f"<title>{art['title']}</title>",
        f"<meta name=\"citation_doi\" content=\"{art['doi']}\">",
        "</head><body>",
        "<header><nav><a href=\"/\">Fixture Journal of Materials</a></nav></header>",
        "<article class=\"body\">",
        f"<h1 class=\"article-title\">{art['title']}</h1>",
        "<p class=\"meta\"><span class=\"open-access\">Open Access</span> "
        f"<a href=\"https://doi.org/{art['doi']}\">https://doi.org/{art['doi']}</a></p>",
        f"<section id=\"abstract\"><h2>Abstract</h2><p>{art['abstract']}</p></section>",
        f"<section id=\"introduction\"><h2>Introduction</h2><p>{art['introduction']}</p></section>",
    ]
    for n, fig in enumerate(figs, start=1):
        parts.append(f"<figure class=\"article-figure\" id=\"fig{n}\">")
        parts.append(f"  <img src=\"/figures/{slug_}_fig{n}.png\" alt=\"Figure {n}\">")
        if fig["caption_html"] is not None:
            parts.append(f"  <figcaption>{fig['caption_html']}</figcaption>")
        parts.append("</figure>")
    parts += ["</article>", "<script>var tracking = '<figure>not a figure</figure>';</script>",
              "</body></html>", ""]
    return "\n".join(parts)


def paywalled_html():
    return "\n".join([
        "<!DOCTYPE html>",
        f"<html><head><meta name=\"citation_doi\" content=\"{PAYWALLED['doi']}\"></head><body>",
        f"<article class=\"body\"><h1 class=\"article-title\">{PAYWALLED['title']}</h1>",
        "<p class=\"meta\"><span class=\"subscription\">Subscription required</span></p>",
        "<figure class=\"article-figure\"><img src=\"/figures/missing.png\"><figcaption>(a) TEM image of "
        "iron oxide nanoparticles.</figcaption></figure>",
        "</article></body></html>", ""])


def search_html(query, pages):
    items = "\n".join(f"  <li><a class=\"result-link\" href=\"/articles/{p}\">Result {i}</a></li>"
                      for i, p in enumerate(pages, start=1))
    return (f"<!DOCTYPE html>\n<html><body><h1>Results for {query}</h1>\n<ol class=\"results\">\n{items}\n</ol>\n"
            "<a class=\"next\" href=\"#\">Next</a></body></html>\n")


def main():
    if ROOT.exists():
        shutil.rmtree(ROOT)
    for sub in ("articles", "figures", "search", "detections", "groundtruth"):
        (ROOT / sub).mkdir(parents=True)
    rng = random.Random(20210)

    expected = {"articles": [], "figures": {}, "label_categories": {}, "class_counts": {}}
    cats = {"single_label": 0, "multi_label": 0, "label_unassigned": 0, "caption_unassigned": 0}
    classes = {}
    for art in ARTICLES:
        s = slug(art["doi"])
        (ROOT / "articles" / art["page"]).write_text(article_html(art, art["figures"], s), encoding="utf-8")
        for n, fig in enumerate(art["figures"], start=1):
            fid = f"{s}_fig{n}"
            render(fig, ROOT / "figures" / f"{fid}.png", rng)
            (ROOT / "detections" / f"{fid}.json").write_text(json.dumps(detections_for(fid, fig), indent=2,
                                                                        ensure_ascii=False) + "\n", encoding="utf-8")
            (ROOT / "groundtruth" / f"{fid}.json").write_text(json.dumps(groundtruth_for(fid, fig), indent=2,
                                                                         ensure_ascii=False) + "\n", encoding="utf-8")
            masters = []
            unmatched = len(fig.get("stray_labels", []))
            for idx, p in enumerate(sorted(fig["panels"], key=lambda q: (q["unit"]["y0"], q["unit"]["x0"]))):
                cats[p["category"]] += 1
                classes[p["class"]] = classes.get(p["class"], 0) + 1
                if p["scale"] and expected_scale(p) is None:
                    unmatched += 2  # the rejected label and its now unpaired line
                masters.append({
                    "subfigure_id": p["id"],
                    "class": p["class"],
                    "segment": None if p["segment"] is None else f"({p['id']}) {p['segment']}.",
                    "keywords": p["keywords"],
                    "label_category": p["category"],
                    "scale": expected_scale(p),
                    "crop": f"images/{fid}/{p['id'] if p['id'] else idx}.png",
                })
            segments = 0 if fig["caption_html"] is None else len(
                [p for p in fig["panels"] if p["segment"] is not None]) + len(fig.get("orphans", []))
            expected["figures"][fid] = {
                "caption_missing": fig["caption_html"] is None,
                "caption_text": None if fig["caption_html"] is None else caption_text(fig["caption_html"]),
                "masters": masters,
                "segments": segments,
                "orphans": fig.get("orphans", []),
                "unmatched_detections": unmatched,
            }
    by_page = {a["page"]: a["doi"] for a in ARTICLES}
    expected["articles"] = [by_page[p] for p in ARTICLE_ORDER]
    (ROOT / "articles" / PAYWALLED["page"]).write_text(paywalled_html(), encoding="utf-8")
    expected["label_categories"] = cats
    expected["class_counts"] = dict(sorted(classes.items()))
    expected["master_count"] = sum(cats.values())
    expected["figure_count"] = len(expected["figures"])

    manifest = {"searches": {}, "fallback": "search/empty.html"}
    for q, (page, hits) in SEARCHES.items():
        (ROOT / "search" / page).write_text(search_html(q, hits), encoding="utf-8")
        manifest["searches"][q] = f"search/{page}"
    (ROOT / "search" / "empty.html").write_text(search_html("nothing", []), encoding="utf-8")
    (ROOT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    (ROOT / "query.json").write_text(json.dumps(QUERY, indent=2) + "\n", encoding="utf-8")
    (ROOT / "expected.json").write_text(json.dumps(expected, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
