#!/usr/bin/env python3
"""Regenerates the bundled BridgeV2-* manifest and campaign-log fixtures.

The per-condition success counts below are transcribed from the reference
result tables. Trials are expanded into JSON-lines logs in the same format
the C++ writer produces, so replaying them exercises the reader against an
independent encoder.
"""

import hashlib
import json
import pathlib
from datetime import datetime, timedelta, timezone

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "data"

PLACE_CRITERION = (
    "the object rests on top of the target object or surface in a stable "
    "configuration, is not grasped by the robot, and the plate is not knocked "
    "over from its initial position")
FLIP_CRITERION = (
    "the base of the container contacts the base of the sink, the container "
    "is in a stable configuration, and it is not grasped by the robot")
SINK_CRITERION = (
    "the object rests in the sink in a stable configuration and is not "
    "grasped by the robot")

CK_IMG = "scenes/carrot-knife/"
PP_IMG = "scenes/pot-plate/"

BASE_TASKS = [
    {
        "id": "carrot_base",
        "instruction": "put carrot on plate",
        "scene": {
            "image": CK_IMG + "base.jpg",
            "objects": [
                {"name": "carrot", "properties": {"color": "orange", "location": "counter"}},
                {"name": "knife", "properties": {"color": "gray and green", "location": "sink"}},
                {"name": "plate", "properties": {"location": "counter"}},
            ],
        },
        "behavior_signature": "grasp the carrot on the counter and place it on the plate",
        "success_criterion": PLACE_CRITERION,
        "demo_count": 10,
    },
    {
        "id": "knife_base",
        "instruction": "put knife on plate",
        "scene": {
            "image": CK_IMG + "base.jpg",
            "objects": [
                {"name": "carrot", "properties": {"color": "orange", "location": "counter"}},
                {"name": "knife", "properties": {"color": "gray and green", "location": "sink"}},
                {"name": "plate", "properties": {"location": "counter"}},
            ],
        },
        "behavior_signature": "grasp the knife in the sink and place it on the plate",
        "success_criterion": PLACE_CRITERION,
        "demo_count": 10,
    },
    {
        "id": "pot_base",
        "instruction": "flip pot upright which is in sink",
        "scene": {
            "image": PP_IMG + "base.jpg",
            "objects": [
                {"name": "pot", "properties": {"color": "gray", "location": "sink", "pose": "upside down"}},
                {"name": "plate", "properties": {"color": "pink", "location": "drying rack"}},
            ],
        },
        "behavior_signature": "grasp the overturned pot in the sink and flip it upright",
        "success_criterion": FLIP_CRITERION,
        "demo_count": 50,
    },
    {
        "id": "plate_base",
        "instruction": "put plate in sink",
        "scene": {
            "image": PP_IMG + "base.jpg",
            "objects": [
                {"name": "pot", "properties": {"color": "gray", "location": "sink", "pose": "upside down"}},
                {"name": "plate", "properties": {"color": "pink", "location": "drying rack"}},
            ],
        },
        "behavior_signature": "grasp the plate in the drying rack and place it in the sink",
        "success_criterion": SINK_CRITERION,
        "demo_count": 50,
    },
]

BASE_INSTR = {b["id"]: b["instruction"] for b in BASE_TASKS}

# (id, base, axis, channels, instruction or None, factor, visual/behavioral
#  description, notes, scene image)
CONDITIONS = [
    ("carrot_color", "carrot_base", "S-PROP", "S", "put the orange object on the plate",
     "referencing color", None, "refers to carrot by color", "base.jpg"),
    ("knife_color", "knife_base", "S-PROP", "S", "put the gray and green object on the plate",
     "referencing color", None, "refers to knife by color", "base.jpg"),
    ("carrot_lift_place", "carrot_base", "S-LANG", "S", "lift carrot and place on plate",
     "changing verbs", None, 'replaced verb "put" using "lift" and "place"', "base.jpg"),
    ("knife_lift_place", "knife_base", "S-LANG", "S", "lift knife and place on plate",
     "changing verbs", None, 'replaced verb "put" using "lift" and "place"', "base.jpg"),
    ("carrot_counter", "carrot_base", "S-MO", "S", "put the object that is on the counter on the plate",
     'understanding "on"', None, "refers to carrot by location (on counter)", "base.jpg"),
    ("knife_sink", "knife_base", "S-MO", "S", "put the object that is in the sink on the plate",
     'understanding "in"', None, "refers to knife by location (in sink)", "base.jpg"),
    ("carrot_basketball", "carrot_base", "S-INT", "S",
     "put the object that is the same color as a basketball on the plate",
     "common object properties", None, "refers to carrot by color of a basketball (orange)", "base.jpg"),
    ("knife_typo", "knife_base", "S-INT", "S", "put knif on plate",
     "typos", None, '"knife" misspelled as "knif"', "base.jpg"),
    ("carrot_in_sink", "carrot_base", "SB-SMO", "SB", "put carrot in sink",
     'understanding "in"', "goal for carrot is sink instead of plate",
     "goal for carrot is sink instead of plate", "base.jpg"),
    ("rotate_knife", "knife_base", "SB-VRB", "SB", "rotate knife clockwise",
     "new action on object", "rotate knife instead of put on plate",
     "rotate knife instead of put on plate", "base.jpg"),
    ("carrot_distractors", "carrot_base", "V-SC", "V", None,
     "distractors", "distractor objects (corn, salt shaker)", "distractor objects (corn, salt shaker)",
     "distractors.jpg"),
    ("knife_distractors", "knife_base", "V-SC", "V", None,
     "distractors", "distractor objects (corn, salt shaker)", "distractor objects (corn, salt shaker)",
     "distractors.jpg"),
    ("carrot_red_sink", "carrot_base", "V-SC", "V", None,
     "surface color", "red sink", "red sink", "red-sink.jpg"),
    ("knife_red_sink", "knife_base", "V-SC", "V", None,
     "surface color", "red sink", "red sink", "red-sink.jpg"),
    ("carrot_orange_plate", "carrot_base", "V-OBJ", "V", None,
     "other object color", "orange plate", "orange plate", "orange-plate.jpg"),
    ("knife_orange_plate", "knife_base", "V-OBJ", "V", None,
     "other object color", "orange plate", "orange plate", "orange-plate.jpg"),
    ("carrot_camera", "carrot_base", "V-VIEW", "V", None,
     "camera pose", "new camera view", "new camera view", "camera.jpg"),
    ("knife_camera", "knife_base", "V-VIEW", "V", None,
     "camera pose", "new camera view", "new camera view", "camera.jpg"),
    ("carrot_farther", "carrot_base", "VB-POSE", "VB", None,
     "manipulated object pose", "carrot slightly farther from robot",
     "carrot slightly farther from robot", "carrot-farther.jpg"),
    ("carrot_start_sink", "carrot_base", "VB-POSE", "VB", None,
     "manipulated object pose", "carrot start in sink, oriented vertically",
     "carrot start in sink, oriented vertically", "carrot-start-sink.jpg"),
    ("knife_raised", "knife_base", "VB-POSE", "VB", None,
     "manipulated object pose", "knife raised by placing it on a block",
     "knife raised by placing it on a block", "knife-raised.jpg"),
    ("knife_right", "knife_base", "VB-POSE", "VB", None,
     "manipulated object pose", "knife moved to the right", "knife moved to the right",
     "knife-right.jpg"),
    ("carrot_shorter_table", "carrot_base", "VB-ISC", "VB", None,
     "surface height", "shorter sink table", "shorter sink table", "shorter-table.jpg"),
    ("knife_shorter_table", "knife_base", "VB-ISC", "VB", None,
     "surface height", "shorter sink table", "shorter sink table", "shorter-table.jpg"),
    ("baby_carrot", "carrot_base", "VB-MOBJ", "VB", None,
     "manipulated object size", "real baby carrot", "real baby carrot", "baby-carrot.jpg"),
    ("small_knife", "knife_base", "VB-MOBJ", "VB", None,
     "manipulated object size", "smaller knife", "smaller knife", "small-knife.jpg"),
    ("ball", "carrot_base", "VSB-NOBJ", "VSB", "put ball on plate",
     "new manipulated object", "carrot replaced with ball", "carrot replaced with ball", "ball.jpg"),
    ("pizza", "knife_base", "VSB-NOBJ", "VSB", "put pizza on plate",
     "new manipulated object", "knife replaced with pizza", "knife replaced with pizza", "pizza.jpg"),
    # flip pot / put plate
    ("pot_color", "pot_base", "S-PROP", "S", "flip the gray object upright which is in sink",
     "referencing color", None, "refers to pot by color", "base.jpg"),
    ("plate_color", "plate_base", "S-PROP", "S", "put the pink object in the sink",
     "referencing color", None, "refers to plate by color", "base.jpg"),
    ("pot_lift_place", "pot_base", "S-LANG", "S", "lift pot upright and place in sink",
     "changing verbs", None, 'replaced verb "flip" using "lift" and "place"', "base.jpg"),
    ("plate_lift_place", "plate_base", "S-LANG", "S", "lift plate and place in sink",
     "changing verbs", None, 'replaced verb "put" using "lift" and "place"', "base.jpg"),
    ("pot_sink", "pot_base", "S-MO", "S", "flip the object that is in the sink upright",
     'understanding "in"', None, "refers to pot by location (in sink)", "base.jpg"),
    ("plate_drying_rack", "plate_base", "S-MO", "S",
     "put the object that is in the drying rack in the sink",
     'understanding "in"', None, "refers to plate by location (in drying rack)", "base.jpg"),
    ("pot_boiling", "pot_base", "S-INT", "S",
     "flip the object that can be used for boiling water upright",
     "common object properties", None, "refers to pot by ability to boil water", "base.jpg"),
    ("plate_typo", "plate_base", "S-INT", "S", "put plait in sink",
     "typos", None, '"plate" misspelled as "plait"', "base.jpg"),
    ("plate_to_counter", "plate_base", "SB-SMO", "SB", "put plate on counter",
     'understanding "on"', "goal for plate is counter instead of sink",
     "goal for plate is counter instead of sink", "base.jpg"),
    ("pot_to_left", "pot_base", "SB-VRB", "SB", "move pot to the left side of the sink",
     "new action on object", "move pot left instead of flip upright",
     "move pot left instead of flip upright", "base.jpg"),
    ("pot_distractors", "pot_base", "V-SC", "V", None,
     "distractors", "distractor objects (eggplant, fork, cheese)",
     "distractor objects (eggplant, fork, cheese)", "distractors.jpg"),
    ("plate_distractors", "plate_base", "V-SC", "V", None,
     "distractors", "distractor objects (eggplant, fork, cheese)",
     "distractor objects (eggplant, fork, cheese)", "distractors.jpg"),
    ("pot_green_sink", "pot_base", "V-SC", "V", None,
     "surface color", "green sink", "green sink", "green-sink.jpg"),
    ("plate_green_sink", "plate_base", "V-SC", "V", None,
     "surface color", "green sink", "green sink", "green-sink.jpg"),
    ("gray_plate", "plate_base", "V-OBJ", "V", None,
     "manipulated object color", "gray plate", "gray plate", "gray-plate.jpg"),
    ("pot_camera", "pot_base", "V-VIEW", "V", None,
     "camera pose", "new camera view", "new camera view", "camera.jpg"),
    ("plate_camera", "plate_base", "V-VIEW", "V", None,
     "camera pose", "new camera view", "new camera view", "camera.jpg"),
    ("pot_left", "pot_base", "VB-POSE", "VB", None,
     "manipulated object pose", "pot moved to left", "pot moved to left", "pot-left.jpg"),
    ("pot_angled", "pot_base", "VB-POSE", "VB", None,
     "manipulated object pose", "pot rotated and angled to the right",
     "pot rotated and angled to the right", "pot-angled.jpg"),
    ("plate_closer", "plate_base", "VB-POSE", "VB", None,
     "manipulated object pose", "plate slightly closer to robot",
     "plate slightly closer to robot", "plate-closer.jpg"),
    ("plate_counter", "plate_base", "VB-POSE", "VB", None,
     "manipulated object pose", "plate flat on counter", "plate flat on counter",
     "plate-counter.jpg"),
    ("pot_shorter_table", "pot_base", "VB-ISC", "VB", None,
     "surface height", "shorter sink table", "shorter sink table", "shorter-table.jpg"),
    ("plate_shorter_table", "plate_base", "VB-ISC", "VB", None,
     "surface height", "shorter sink table", "shorter sink table", "shorter-table.jpg"),
    ("thin_pot", "pot_base", "VB-MOBJ", "VB", None,
     "manipulated object shape", "thinner and taller metal pot", "thinner and taller metal pot",
     "thin-pot.jpg"),
    ("red_bowl", "plate_base", "VB-MOBJ", "VB", None,
     "manipulated object shape", "plate replaced with red bowl", "plate replaced with red bowl",
     "red-bowl.jpg"),
    ("cup", "pot_base", "VSB-NOBJ", "VSB", "flip cup upright which is in sink",
     "new manipulated object", "pot replaced with cup", "pot replaced with cup", "cup.jpg"),
    ("spoon", "plate_base", "VSB-NOBJ", "VSB", "put spoon in sink",
     "new manipulated object", "plate replaced with spoon", "plate replaced with spoon", "spoon.jpg"),
]

COND_BY_ID = {c[0]: c for c in CONDITIONS}


def image_dir(base):
    return CK_IMG if base in ("carrot_base", "knife_base") else PP_IMG


def make_delta(cond):
    cid, base, axis, ch, instr, factor, desc, notes, img = cond
    delta = {"factor": factor}
    if "V" in ch:
        delta["visual"] = {"description": desc}
    if "S" in ch:
        delta["instruction"] = instr
    if "B" in ch:
        delta["behavioral"] = {"description": desc if desc else notes}
    return delta


def make_condition(cond):
    cid, base, axis, ch, instr, factor, desc, notes, img = cond
    return {
        "id": cid,
        "base_task": base,
        "axis": axis,
        "delta": make_delta(cond),
        "notes": notes,
        "scene_image": image_dir(base) + img,
    }


# (id, base, part condition ids, effective instruction or None, notes, image)
COMPOSITIONS = [
    ("carrot_color_lift_place", "carrot_base", ["carrot_color", "carrot_lift_place"],
     "lift the orange object and place on plate",
     'refers to carrot by color and replaced verb "put" using "lift" and "place"', "base.jpg"),
    ("knife_color_lift_place", "knife_base", ["knife_color", "knife_lift_place"],
     "lift the gray and green object and place on plate",
     'refers to knife by color and replaced verb "put" using "lift" and "place"', "base.jpg"),
    ("carrot_distractors_orange_plate", "carrot_base", ["carrot_distractors", "carrot_orange_plate"],
     None, "distractor objects (corn, salt shaker) and orange plate", "distractors-orange-plate.jpg"),
    ("knife_distractors_orange_plate", "knife_base", ["knife_distractors", "knife_orange_plate"],
     None, "distractor objects (corn, salt shaker) and orange plate", "distractors-orange-plate.jpg"),
    ("carrot_farther_shorter_table", "carrot_base", ["carrot_farther", "carrot_shorter_table"],
     None, "carrot slightly farther from robot and shorter sink table",
     "carrot-farther-shorter-table.jpg"),
    ("knife_right_shorter_table", "knife_base", ["knife_right", "knife_shorter_table"],
     None, "knife moved to right and shorter sink table", "knife-right-shorter-table.jpg"),
]


def make_composition(comp):
    cid, base, parts, eff, notes, img = comp
    out = {
        "id": cid,
        "base_task": base,
        "parts": [{"axis": COND_BY_ID[p][2], "delta": make_delta(COND_BY_ID[p])} for p in parts],
        "notes": notes,
        "scene_image": image_dir(base) + img,
    }
    if eff is not None:
        out["effective_instruction"] = eff
    return out


MODELS7 = ["openvla-oxe", "openvla-oxe-ft", "openvla-bridge-ft", "openvla-bridge-vqa-ft",
           "minivla-bridge-ft", "minivla-bridge-novq-ft", "pi0-bridge-ft"]
MAIN_MODELS = ["openvla-bridge-ft", "minivla-bridge-ft", "pi0-bridge-ft"]

# put carrot / put knife results, 7 models; None marks a "--" cell.
TABLE_CARROT_KNIFE = {
    "carrot_base": [3, 5, 3, 4, 5, 4, 4],
    "knife_base": [2, 3, 5, 5, 5, 4, 5],
    "carrot_color": [2, 4, 4, 2, 2, 2, 2],
    "knife_color": [2, 3, 0, 0, 0, 0, 0],
    "carrot_lift_place": [3, 5, 2, 4, 5, 3, 5],
    "knife_lift_place": [2, 4, 4, 3, 4, 1, 5],
    "carrot_counter": [0, 0, 0, 0, 0, 0, 0],
    "knife_sink": [1, 2, 1, 3, 0, 0, 3],
    "carrot_basketball": [0, 0, 0, 1, 0, 0, 0],
    "knife_typo": [1, 4, 4, 4, 1, 1, 4],
    "carrot_in_sink": [None, None, 5, None, 5, None, 3],
    "rotate_knife": [None, None, 1, None, 0, None, 0],
    "carrot_distractors": [3, 5, 3, 3, 3, 2, 4],
    "knife_distractors": [1, 3, 2, 3, 5, 3, 4],
    "carrot_red_sink": [3, 3, 1, 3, 3, 1, 5],
    "knife_red_sink": [1, 3, 2, 2, 3, 4, 2],
    "carrot_orange_plate": [2, 3, 2, 3, 4, 0, 3],
    "knife_orange_plate": [4, 4, 2, 4, 5, 5, 5],
    "carrot_camera": [0, 0, 0, 0, 1, 0, 0],
    "knife_camera": [0, 0, 0, 0, 1, 0, 5],
    "carrot_farther": [2, 3, 2, 4, 3, 3, 2],
    "carrot_start_sink": [3, 3, 3, 2, 5, 3, 5],
    "knife_raised": [0, 2, 3, 4, 4, 3, 1],
    "knife_right": [2, 3, 3, 5, 4, 2, 5],
    "carrot_shorter_table": [2, 5, 2, 4, 3, 4, 5],
    "knife_shorter_table": [0, 3, 3, 3, 2, 2, 5],
    "baby_carrot": [0, 0, 0, 0, 1, 0, 1],
    "small_knife": [0, 0, 1, 0, 0, 0, 0],
    "ball": [None, None, 0, None, 3, None, 1],
    "pizza": [None, None, 1, None, 0, None, 0],
}

# flip pot / put plate results: openvla-bridge-ft, minivla-bridge-ft, pi0-bridge-ft.
TABLE_POT_PLATE = {
    "pot_base": [3, 5, 5],
    "plate_base": [3, 4, 4],
    "pot_color": [4, 1, 1],
    "plate_color": [0, 0, 0],
    "pot_lift_place": [0, 2, 1],
    "plate_lift_place": [0, 0, 0],
    "pot_sink": [1, 1, 5],
    "plate_drying_rack": [0, 0, 0],
    "pot_boiling": [0, 0, 0],
    "plate_typo": [0, 0, 0],
    "plate_to_counter": [0, 0, 0],
    "pot_to_left": [0, 2, 0],
    "pot_distractors": [3, 4, 5],
    "plate_distractors": [3, 1, 0],
    "pot_green_sink": [3, 3, 4],
    "plate_green_sink": [2, 1, 3],
    "gray_plate": [4, 3, 3],
    "pot_camera": [0, 1, 0],
    "plate_camera": [0, 0, 0],
    "pot_left": [3, 0, 0],
    "pot_angled": [3, 3, 5],
    "plate_closer": [0, 3, 4],
    "plate_counter": [2, 0, 0],
    "pot_shorter_table": [5, 2, 5],
    "plate_shorter_table": [3, 0, 2],
    "thin_pot": [3, 0, 1],
    "red_bowl": [0, 2, 5],
    "cup": [3, 0, 3],
    "spoon": [0, 0, 0],
}

# Compositional results, 7 models.
TABLE_COMPOSITIONAL = {
    "carrot_color_lift_place": [3, 4, 4, 0, 4, 2, 1],
    "knife_color_lift_place": [3, 4, 0, 0, 0, 0, 0],
    "carrot_distractors_orange_plate": [1, 4, 2, 3, 3, 0, 3],
    "knife_distractors_orange_plate": [2, 2, 3, 3, 5, 5, 4],
    "carrot_farther_shorter_table": [3, 3, 3, 3, 2, 3, 3],
    "knife_right_shorter_table": [2, 3, 0, 4, 3, 3, 5],
}

# Compositional summary (two-axis groups and overall), typed separately so
# it can be cross-checked against the per-composition table above.
TABLE_COMPOSITIONAL_SUMMARY = {
    "S-PROP+S-LANG": [6, 8, 4, 0, 4, 2, 1],
    "V-SC+V-OBJ": [3, 6, 5, 6, 8, 5, 7],
    "VB-POSE+VB-ISC": [5, 6, 3, 7, 5, 6, 8],
    "overall": [14, 20, 12, 13, 17, 13, 16],
}

TRIALS = 5
MAX_STEPS = 100


def canonical(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def compact(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def checksum(event):
    return hashlib.sha256(compact(event).encode("utf-8")).hexdigest()[:16]


class LogWriter:
    def __init__(self):
        self.lines = []
        self.t0 = datetime(2025, 2, 3, 9, 0, 0, tzinfo=timezone.utc)

    def stamp(self, seq):
        return (self.t0 + timedelta(minutes=seq)).strftime("%Y-%m-%dT%H:%M:%SZ")

    def emit(self, payload):
        seq = len(self.lines) + 1
        event = dict(payload)
        event["seq"] = seq
        event["timestamp"] = self.stamp(seq)
        event["checksum"] = checksum(event)
        self.lines.append(compact(event))

    def text(self):
        return "".join(line + "\n" for line in self.lines)


def scope_entries(ids):
    base_ids = set(BASE_INSTR)
    comp_ids = {c[0] for c in COMPOSITIONS}
    out = []
    for i in ids:
        kind = "base" if i in base_ids else "composition" if i in comp_ids else "condition"
        out.append({"id": i, "kind": kind})
    return out


def build_log(campaign_id, manifest_ref, models, scope, results, exclusions):
    log = LogWriter()
    config = {
        "id": campaign_id,
        "manifest": manifest_ref,
        "models": models,
        "trials_per_condition": TRIALS,
        "max_steps": MAX_STEPS,
        "scope": scope_entries(scope),
        "exclusions": [{"model": m, "condition": c} for (m, c) in exclusions],
    }
    log.emit({"event": "created", "config": config})
    for cond in scope:
        for mi, model in enumerate(models):
            k = results[cond][mi]
            if k is None:
                continue
            for t in range(TRIALS):
                ok = t < k
                log.emit({
                    "event": "trial",
                    "model": model,
                    "condition": cond,
                    "outcome": "success" if ok else "failure",
                    "steps": 50 if ok else MAX_STEPS,
                    "note": "",
                    "overflow": False,
                })
    return log.text()


def check_compositional_summary():
    groups = {}
    for comp in COMPOSITIONS:
        sig = "+".join(COND_BY_ID[p][2] for p in comp[2])
        row = TABLE_COMPOSITIONAL[comp[0]]
        acc = groups.setdefault(sig, [0] * 7)
        for i, v in enumerate(row):
            acc[i] += v
    overall = [sum(g[i] for g in groups.values()) for i in range(7)]
    groups["overall"] = overall
    assert groups == TABLE_COMPOSITIONAL_SUMMARY, groups


# Checkmark rows of the prior-work comparison table. Columns, in order:
PRIOR_WORK_COLUMNS = ["V-AUG", "V-SC", "V-OBJ", "V-VIEW", "S-PROP", "S-LANG", "S-MO", "S-AFF",
                  "S-INT", "B-HOBJ", "VB-POSE", "VB-ISC", "VB-MOBJ", "VB-ROB", "SB-SMO",
                  "SB-NOUN", "VSB-NOBJ"]
PRIOR_WORK_ROWS = [
    ("FactorWorld", "simulation", "1111000000111000" + "0"),
    ("KitchenShift", "simulation", "1011000000101100" + "0"),
    ("Colosseum", "simulation", "1111000001001000" + "0"),
    ("Eff-Comp", "simulation", "0101000000100000" + "0"),
    ("CALVIN", "simulation", "0110110000111000" + "0"),
    ("VLABench", "simulation", "0000111110000010" + "1"),
    ("Scaling", "real", "0010000000111000" + "0"),
    ("BridgeV2", "real", "1110000001111100" + "1"),
    ("DROID", "real", "0111000000001100" + "0"),
    ("BC-Z", "policy", "0100000000101100" + "1"),
    ("RT-Series", "policy", "0100101010111110" + "1"),
    ("MT-ACT", "policy", "1100000000111100" + "1"),
    ("pi0", "policy", "0110000000111100" + "1"),
    ("OpenVLA", "policy", "0100111010101101" + "1"),
    ("BridgeV2-★", "this benchmark", "0111111010111011" + "1"),
]


def coverage_rows():
    rows = []
    for name, group, bits in PRIOR_WORK_ROWS:
        assert len(bits) == len(PRIOR_WORK_COLUMNS), name
        rows.append({"name": name, "group": group,
                     "axes": [a for a, b in zip(PRIOR_WORK_COLUMNS, bits) if b == "1"]})
    return {"columns": PRIOR_WORK_COLUMNS, "rows": rows}


MOCK_PROPOSALS = {
    ("V-OBJ", "carrot_base"): [
        {"visualChange": "change the color of the plate to blue"},
        {"visualChange": "change the color of the plate to green"},
        {"visualChange": "change the color of the plate to white with a black rim"},
    ],
    ("S-PROP", "carrot_base"): [
        {"languageChange": "put the orange object on the plate"},
        {"languageChange": "put the long orange vegetable on the plate"},
        {"languageChange": "put the small orange object on the plate"},
    ],
    ("VB-POSE", "carrot_base"): [
        {"visualChange": "move the carrot farther from the robot"},
        {"visualChange": "rotate the carrot so that it points toward the robot"},
        {"visualChange": "move the carrot to the left edge of the counter"},
    ],
    ("SB-VRB", "carrot_base"): [
        {"languageChange": "push carrot toward plate"},
        {"languageChange": "rotate carrot clockwise"},
        {"languageChange": "pick up carrot and hold it above the plate"},
    ],
    ("VSB-NOBJ", "carrot_base"): [
        {"visualChange": "replace the carrot with a zucchini", "languageChange": "put zucchini on plate"},
        {"visualChange": "replace the carrot with a banana", "languageChange": "put banana on plate"},
        {"visualChange": "replace the carrot with a red apple", "languageChange": "put apple on plate"},
    ],
    ("S-PROP", "plate_base"): [
        {"languageChange": "put the pink object in the sink"},
        {"languageChange": "put the round pink object in the sink"},
        {"languageChange": "put the flat round object in the sink"},
    ],
    ("VSB-NOBJ", "knife_base"): [
        {"visualChange": "replace the knife with a wooden spoon", "languageChange": "put spoon on plate"},
        {"visualChange": "replace the knife with a spatula", "languageChange": "put spatula on plate"},
        {"visualChange": "replace the knife with a fork", "languageChange": "put fork on plate"},
    ],
}


def write_support_files():
    (DATA / "prior_work_coverage.json").write_text(canonical(coverage_rows()), encoding="utf-8")
    mock = DATA / "mock_vlm"
    mock.mkdir(parents=True, exist_ok=True)
    for (axis, base), items in MOCK_PROPOSALS.items():
        (mock / f"{axis}__{base}.json").write_text(
            json.dumps(items, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def main():
    check_compositional_summary()
    assert len(CONDITIONS) == 55
    assert len(TABLE_CARROT_KNIFE) == 30 and len(TABLE_POT_PLATE) == 29

    manifest = {
        "name": "BridgeV2-★",
        "base_tasks": BASE_TASKS,
        "conditions": [make_condition(c) for c in CONDITIONS],
        "compositions": [make_composition(c) for c in COMPOSITIONS],
    }
    text = canonical(manifest)
    (DATA).mkdir(parents=True, exist_ok=True)
    (DATA / "bridgev2-star.stargen.json").write_text(text, encoding="utf-8")
    ref = {"name": manifest["name"], "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest()}

    fixtures = DATA / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)

    # Main results: 3 models over 4 base tasks + 55 conditions.
    main_results = {}
    for cid, row in TABLE_CARROT_KNIFE.items():
        main_results[cid] = [row[MODELS7.index(m)] for m in MAIN_MODELS]
    main_results.update(TABLE_POT_PLATE)
    scope = [b["id"] for b in BASE_TASKS] + [c[0] for c in CONDITIONS]
    assert len(scope) == 59
    total = sum(sum(v for v in main_results[c] if v is not None) for c in scope)
    cells = sum(1 for c in scope for v in main_results[c] if v is not None)
    assert cells * TRIALS == 885, cells
    (fixtures / "main_results.stargen.log").write_text(
        build_log("main_results", ref, MAIN_MODELS, scope, main_results, []), encoding="utf-8")

    # All seven models on put carrot / put knife, with "--" cells excluded.
    ck_scope = ["carrot_base", "knife_base"] + [
        c[0] for c in CONDITIONS if c[1] in ("carrot_base", "knife_base")]
    exclusions = [(m, c) for c in ck_scope for mi, m in enumerate(MODELS7)
                  if TABLE_CARROT_KNIFE[c][mi] is None]
    (fixtures / "model_ablations.stargen.log").write_text(
        build_log("model_ablations", ref, MODELS7, ck_scope, TABLE_CARROT_KNIFE, exclusions),
        encoding="utf-8")

    comp_scope = [c[0] for c in COMPOSITIONS]
    (fixtures / "compositional.stargen.log").write_text(
        build_log("compositional", ref, MODELS7, comp_scope, TABLE_COMPOSITIONAL, []),
        encoding="utf-8")

    write_support_files()
    print(f"manifest sha256 {ref['sha256']}; main results {cells * TRIALS} trials, "
          f"{total} successes")


if __name__ == "__main__":
    main()
