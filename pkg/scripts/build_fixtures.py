#!/usr/bin/env python3
"""Regenerates the scripted fixture corpus under fixtures/.

Everything the deterministic tests replay lives here: the cars dataset,
the 10-turn golden conversation bundle, the negative evidence bundle, the
topic-threshold bundle, and the evaluation label files. The script is
self-auditing: it checks every evidence quote against the block text it
will be bound to, checks generated-topic similarity ceilings, and checks
the designed transition sequence, so a bad edit fails the build instead
of producing a silently wrong golden.
"""

from __future__ import annotations

import json
import math
import random
import statistics
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from chatinsights.blocks import parse_blocks  # noqa: E402

FIXTURES = ROOT / "fixtures"

ORIGIN_PATTERN = ("USA", "USA", "Japan", "Europe")
BRANDS = {
    "USA": ("Ford", "Chevrolet"),
    "Japan": ("Toyota", "Datsun"),
    "Europe": ("Volkswagen", "Peugeot"),
}
MPG_BASE = {"USA": 15.0, "Japan": 24.0, "Europe": 20.0}
HP_BASE = {4: 95, 6: 130, 8: 165}
DISP_BASE = {4: 105, 6: 200, 8: 320}
OUTLIER_ROW = 20  # this car gets an extreme acceleration value


def build_rows() -> list[dict]:
    rng = random.Random(7)
    rows = []
    for year_idx in range(8):
        for slot, origin in enumerate(ORIGIN_PATTERN):
            i = year_idx * 4 + slot
            if origin == "USA":
                cylinders = 8 if slot == 0 else 6
            else:
                cylinders = 4
            mpg = round(MPG_BASE[origin] + 0.8 * year_idx + rng.uniform(-1.5, 1.5), 1)
            hp = int(round(HP_BASE[cylinders] + rng.uniform(-8, 8)))
            disp = int(round(DISP_BASE[cylinders] + rng.uniform(-15, 15)))
            weight = int(round(1200 + 11 * hp + rng.uniform(-120, 120)))
            accel = 23.5 if i == OUTLIER_ROW else round(rng.uniform(10.5, 14.5), 1)
            brand = BRANDS[origin][i % 2]
            rows.append(
                {
                    "Name": f"{brand} {1970 + year_idx} s{slot}",
                    "MPG": mpg,
                    "Cylinders": cylinders,
                    "Displacement": disp,
                    "Horsepower": hp,
                    "Weight": weight,
                    "Acceleration": accel,
                    "Year": f"{1970 + year_idx}-01-01",
                    "Origin": origin,
                }
            )
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    header = list(rows[0])
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(row[h]) for h in header))
    return "\n".join(lines) + "\n"


def mean_by(rows, value, group):
    out: dict[str, list[float]] = {}
    for row in rows:
        out.setdefault(row[group], []).append(float(row[value]))
    return {k: statistics.fmean(v) for k, v in out.items()}


def corr(rows, a, b):
    return statistics.correlation([float(r[a]) for r in rows], [float(r[b]) for r in rows])


# ---------------------------------------------------------------------------
# embedding vectors: mains on axes 0..3, subtopics on axes 4..7 (siblings
# never share an axis), insights near their main topic's axis
# ---------------------------------------------------------------------------

DIM = 8


def unit(values):
    n = math.sqrt(sum(v * v for v in values))
    return [round(v / n, 6) for v in values]


def axis(i, scale=1.0):
    v = [0.0] * DIM
    v[i] = scale
    return v


def mix(parts):
    v = [0.0] * DIM
    for i, scale in parts:
        v[i] += scale
    return unit(v)


def cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return dot / (nu * nv)


class Cars:
    """The designed 10-turn golden conversation."""

    def __init__(self):
        self.rows = build_rows()
        self.turns: list[dict] = []          # per-turn authoring info
        self.ie_replies: list[str] = []
        self.io_replies: list[str] = []
        self.score_replies: list[str] = []
        self.embeddings: dict[str, list[float]] = {}
        self.executions: list[dict] = []
        self.insights: list[dict] = []       # audit bookkeeping
        self.topic_vectors: dict[str, list[float]] = {}  # title -> vector
        self.main_axis: dict[str, int] = {}

    # -- turn authoring ----------------------------------------------------

    def text_turn(self, query: str, text: str) -> int:
        turn_id = len(self.turns) + 1
        self.turns.append(
            {"query": query, "responses": [text], "blocks": parse_blocks(text)}
        )
        return turn_id

    def code_turn(
        self,
        query: str,
        intro: str,
        code: str,
        stdout: str,
        interp: str,
        artifacts: list[dict] | None = None,
        chunk: int = 0,
    ) -> int:
        turn_id = len(self.turns) + 1
        response_a = f"{intro}\n```python\n{code}\n```"
        blocks = list(parse_blocks(response_a))
        assert [b.kind for b in blocks] == ["text", "code"], blocks
        self.executions.append(
            {
                "stdout": stdout,
                "stderr": "",
                "exit_code": 0,
                "duration_s": 0.01,
                "artifacts": artifacts or [],
            }
        )
        self.turns.append(
            {
                "query": query,
                "responses": [response_a, interp],
                "chunk": chunk,
                "blocks": blocks,          # extended below with outputs
                "stdout": stdout,
                "artifacts": artifacts or [],
                "interp": interp,
            }
        )
        return turn_id

    def block_texts(self, turn_id: int) -> list[tuple[str, str]]:
        """(kind, content) per block in final parse order for one turn."""
        info = self.turns[turn_id - 1]
        out = [(b.kind, b.content) for b in info["blocks"]]
        if "stdout" in info:
            out.append(("code_output", info["stdout"]))
            for artifact in info["artifacts"]:
                out.append(
                    ("visualization", json.dumps(artifact["spec"], sort_keys=True, separators=(",", ":")))
                )
            out.extend((b.kind, b.content) for b in parse_blocks(info["interp"]))
        return out

    def ref(self, turn_id: int, kind: str, quote: str | None, occurrence: int = 0) -> dict:
        """Evidence ref dict; asserts the quote resolves in the chosen block."""
        blocks = self.block_texts(turn_id)
        matches = [i for i, (k, _) in enumerate(blocks) if k == kind]
        assert matches, f"turn {turn_id} has no {kind} block"
        index = matches[occurrence]
        content = blocks[index][1]
        ref = {"turn_id": turn_id, "block_index": index}
        if quote is not None:
            assert quote in content, f"quote not in turn {turn_id} block {index}: {quote!r}"
            ref["quote"] = quote
        return ref

    # -- insight authoring ---------------------------------------------------

    def new_main(self, title: str, description: str) -> dict:
        axis_index = len(self.main_axis)
        self.main_axis[title] = axis_index
        vector = axis(axis_index)
        self.topic_vectors[title] = vector
        self.embeddings[f"{title}: {description}"] = vector
        return {"generated": {"title": title, "description": description}}

    def new_sub(self, parent_title: str, sub_slot: int, title: str, description: str) -> dict:
        # sibling subs use axes 4..7, so same-parent similarities stay ~0
        vector = mix([(4 + sub_slot, 1.0), (self.main_axis[parent_title], 0.12)])
        self.topic_vectors[title] = vector
        self.embeddings[f"{title}: {description}"] = vector
        return {"generated": {"title": title, "description": description}}

    def add_insight(
        self,
        turn_id: int,
        summary: str,
        votes: list[str],
        evidence: list[dict],
        attrs: list[str],
        actions: list[dict],
        s_sem: int,
        s_rationale: str,
        main: dict | tuple[str, str],
        sub: dict | tuple[str, str],
        jitter: int,
        expect_transition: str,
    ) -> dict:
        """Selected topics are passed as (topic_id, title) pairs; generated
        ones as the raw reply dict from new_main/new_sub."""
        delta = {
            "action": "identify_new",
            "summary": summary,
            "category_votes": votes,
            "evidence": evidence,
        }
        main_title = main[1] if isinstance(main, tuple) else main["generated"]["title"]
        vector = mix([(self.main_axis[main_title], 0.9), (4 + jitter % 4, 0.3 + 0.02 * jitter)])
        self.embeddings[summary] = vector
        self.io_replies.append(json.dumps({"attributes": attrs, "actions": actions}))
        self.score_replies.append(f"{s_sem}: {s_rationale}")
        record = {
            "turn": turn_id,
            "delta": delta,
            "attrs": set(attrs),
            "expect_transition": expect_transition,
            "main_title": main_title,
        }
        # topic replies come after context+scoring in the io channel order
        self.io_replies.append(json.dumps(main if isinstance(main, dict) else {"selected": main[0]}))
        self.io_replies.append(json.dumps(sub if isinstance(sub, dict) else {"selected": sub[0]}))
        record["sub_title"] = sub[1] if isinstance(sub, tuple) else sub["generated"]["title"]
        self.insights.append(record)
        return delta


def chunked(text: str, size: int) -> list[str]:
    return [text[i : i + size] for i in range(0, len(text), size)]


def build_cars() -> None:
    c = Cars()
    rows = c.rows

    mpg_by_origin = {k: round(v, 1) for k, v in mean_by(rows, "MPG", "Origin").items()}
    mpg_by_year = {
        year: round(v, 1)
        for year, v in sorted(mean_by(rows, "MPG", "Year").items())
    }
    hp_by_origin = {k: round(v, 1) for k, v in mean_by(rows, "Horsepower", "Origin").items()}
    disp_by_origin = {k: round(v, 1) for k, v in mean_by(rows, "Displacement", "Origin").items()}
    weight_by_origin = {k: round(v, 0) for k, v in mean_by(rows, "Weight", "Origin").items()}
    r_hp_weight = round(corr(rows, "Horsepower", "Weight"), 3)
    r_mpg_weight = round(corr(rows, "MPG", "Weight"), 3)
    r_mpg_hp = round(corr(rows, "MPG", "Horsepower"), 3)
    accel = [r["Acceleration"] for r in rows]
    accel_mean = round(statistics.fmean(accel), 2)
    outlier_name = rows[OUTLIER_ROW]["Name"]
    origin_counts = {o: sum(1 for r in rows if r["Origin"] == o) for o in ("USA", "Japan", "Europe")}
    hp_values = [r["Horsepower"] for r in rows]
    hp_mean = round(statistics.fmean(hp_values), 1)
    hp_sd = round(statistics.pstdev(hp_values), 1)
    mpg_values = [r["MPG"] for r in rows]
    mpg_cv = round(statistics.pstdev(mpg_values) / statistics.fmean(mpg_values), 3)

    # ---- turn 1: schema question, no code -----------------------------------
    c.text_turn(
        "What does this dataset contain?",
        "The dataset describes 32 cars from 1970 to 1977. Each row has the car "
        "name, fuel efficiency (MPG), engine size (Cylinders, Displacement, "
        "Horsepower), Weight, Acceleration, model Year, and Origin (USA, Japan, "
        "or Europe). Ask me anything about it.",
    )

    # ---- turn 2: MPG by origin (difference) ---------------------------------
    t2_stdout = "mean MPG by Origin\n" + "\n".join(
        f"{o} {mpg_by_origin[o]}" for o in ("Europe", "Japan", "USA")
    )
    t2_interp = (
        f"Japanese cars average {mpg_by_origin['Japan']} MPG while American cars "
        f"average only {mpg_by_origin['USA']} MPG, with European cars in between "
        f"at {mpg_by_origin['Europe']} MPG. Imported cars are clearly more fuel "
        "efficient than domestic ones in this sample."
    )
    t2 = c.code_turn(
        "How does fuel efficiency differ by region of origin?",
        "I will group the cars by Origin and compare average MPG.",
        'import pandas as pd\ndf = pd.read_csv("data.csv")\n'
        'print("mean MPG by Origin")\n'
        'print(df.groupby("Origin")["MPG"].mean().round(1).to_string(header=False))',
        t2_stdout,
        t2_interp,
        chunk=5,
    )
    c.add_insight(
        t2,
        f"Japanese cars average {mpg_by_origin['Japan']} MPG versus "
        f"{mpg_by_origin['USA']} MPG for American cars.",
        ["difference", "difference", "extremum"],
        [
            c.ref(t2, "text", "clearly more fuel efficient than domestic ones", 1),
            c.ref(t2, "code", 'df.groupby("Origin")["MPG"].mean()'),
            c.ref(t2, "code_output", f"Japan {mpg_by_origin['Japan']}"),
        ],
        ["MPG", "Origin"],
        [{"kind": "aggregation", "detail": "mean MPG by Origin"}],
        4,
        "large efficiency gap directly answering the question",
        c.new_main("Fuel Efficiency", "How far the cars go on a gallon of fuel."),
        c.new_sub("Fuel Efficiency", 0, "Efficiency by Origin", "MPG compared across producing regions."),
        jitter=0,
        expect_transition="initial",
    )

    # ---- turn 3: MPG over years (trend) -------------------------------------
    years = list(mpg_by_year)
    t3_stdout = "mean MPG by Year\n" + "\n".join(f"{y[:4]} {v}" for y, v in mpg_by_year.items())
    t3_interp = (
        f"Average MPG rises steadily from {mpg_by_year[years[0]]} in 1970 to "
        f"{mpg_by_year[years[-1]]} in 1977. Fuel efficiency improved over the "
        "decade across the whole fleet."
    )
    t3 = c.code_turn(
        "Did fuel efficiency change over the years?",
        "Let me aggregate MPG by model year to see the trend.",
        'import pandas as pd\ndf = pd.read_csv("data.csv")\n'
        'print("mean MPG by Year")\n'
        'print(df.groupby("Year")["MPG"].mean().round(1).to_string(header=False))',
        t3_stdout,
        t3_interp,
    )
    c.add_insight(
        t3,
        f"Average MPG rose from {mpg_by_year[years[0]]} in 1970 to "
        f"{mpg_by_year[years[-1]]} in 1977.",
        ["trend"],
        [
            c.ref(t3, "text", "Fuel efficiency improved over the decade", 1),
            c.ref(t3, "code_output", f"1977 {mpg_by_year[years[-1]]}"),
        ],
        ["MPG", "Year"],
        [{"kind": "aggregation", "detail": "mean MPG per model year"}],
        4,
        "consistent multi-year improvement",
        ("t1", "Fuel Efficiency"),
        c.new_sub("Fuel Efficiency", 1, "Efficiency Over Time", "Year-on-year MPG movement."),
        jitter=1,
        expect_transition="continue",
    )

    # ---- turn 4: bar chart refinement of insight i1 --------------------------
    chart_spec = {
        "mark": "bar",
        "data": [{"origin": o, "mpg": mpg_by_origin[o]} for o in ("Europe", "Japan", "USA")],
        "encoding": {"x": "origin", "y": "mpg"},
        "title": "Mean MPG by Origin",
    }
    t4_interp = (
        "Here is the bar chart. The Japan bar sits well above the USA bar, "
        "making the regional efficiency gap easy to see at a glance."
    )
    t4 = c.code_turn(
        "Show that origin comparison as a bar chart instead.",
        "I will render the same aggregation as a bar chart spec.",
        'import pandas as pd, json\ndf = pd.read_csv("data.csv")\n'
        'means = df.groupby("Origin")["MPG"].mean().round(1)\n'
        'spec = {"mark": "bar", "data": [{"origin": o, "mpg": float(v)} for o, v in means.items()],\n'
        '        "encoding": {"x": "origin", "y": "mpg"}, "title": "Mean MPG by Origin"}\n'
        'json.dump(spec, open("chart_1.json", "w"))\nprint("chart written")',
        "chart written",
        t4_interp,
        artifacts=[{"name": "chart_1.json", "spec": chart_spec}],
    )
    refine = {
        "action": "refine_existing",
        "target": "i1",
        "summary": (
            f"Japanese cars average {mpg_by_origin['Japan']} MPG versus "
            f"{mpg_by_origin['USA']} MPG for American cars, shown as a bar chart."
        ),
        "category_votes": ["difference"],
        "evidence": [
            c.ref(t4, "visualization", None),
            c.ref(t4, "text", "regional efficiency gap easy to see", 1),
        ],
    }
    refine_reply = json.dumps([refine])

    # ---- turn 5: correlations (two insights) ---------------------------------
    t5_stdout = f"corr(Horsepower, Weight) = {r_hp_weight}\ncorr(MPG, Weight) = {r_mpg_weight}"
    t5_interp = (
        f"Horsepower and Weight are almost perfectly correlated (r = {r_hp_weight}): "
        "stronger engines sit in heavier cars. Weight works against efficiency, "
        f"with MPG and Weight strongly negatively correlated (r = {r_mpg_weight})."
    )
    t5 = c.code_turn(
        "How do horsepower, weight, and MPG relate to each other?",
        "I will compute pairwise correlations between those columns.",
        'import pandas as pd\ndf = pd.read_csv("data.csv")\n'
        'print(f"corr(Horsepower, Weight) = {df.Horsepower.corr(df.Weight):.3f}")\n'
        'print(f"corr(MPG, Weight) = {df.MPG.corr(df.Weight):.3f}")',
        t5_stdout,
        t5_interp,
    )
    c.add_insight(
        t5,
        f"Horsepower and Weight are almost perfectly correlated (r = {r_hp_weight}).",
        ["correlation"],
        [
            c.ref(t5, "text", "stronger engines sit in heavier cars", 1),
            c.ref(t5, "code_output", f"corr(Horsepower, Weight) = {r_hp_weight}"),
        ],
        ["Horsepower", "Weight"],
        [{"kind": "derive", "detail": "pairwise Pearson correlation"}],
        5,
        "near-perfect structural relationship",
        c.new_main("Power and Build", "Engine power and the physical build of the cars."),
        c.new_sub("Power and Build", 0, "Power versus Weight", "How engine output tracks curb weight."),
        jitter=2,
        expect_transition="shift",
    )
    c.add_insight(
        t5,
        f"Heavier cars get worse mileage: MPG and Weight correlate at r = {r_mpg_weight}.",
        ["correlation", "trend"],
        [
            c.ref(t5, "text", "Weight works against efficiency", 1),
            c.ref(t5, "code_output", f"corr(MPG, Weight) = {r_mpg_weight}"),
        ],
        ["MPG", "Weight"],
        [{"kind": "derive", "detail": "Pearson correlation of MPG with Weight"}],
        4,
        "strong negative driver of efficiency",
        ("t1", "Fuel Efficiency"),
        c.new_sub("Fuel Efficiency", 2, "Efficiency Drivers", "What pushes MPG up or down."),
        jitter=3,
        expect_transition="continue",
    )

    # ---- turn 6: acceleration outlier ----------------------------------------
    t6_stdout = (
        f"mean acceleration = {accel_mean}\nmax acceleration = 23.5\n"
        f"slowest car: {outlier_name}"
    )
    t6_interp = (
        f"One car stands far apart: {outlier_name} needs 23.5 seconds to reach "
        f"60 mph while the fleet averages {accel_mean}. It is a clear outlier "
        "on acceleration."
    )
    t6 = c.code_turn(
        "Are there any unusual cars in terms of acceleration?",
        "I will look at the acceleration distribution and its extremes.",
        'import pandas as pd\ndf = pd.read_csv("data.csv")\n'
        'print(f"mean acceleration = {df.Acceleration.mean():.2f}")\n'
        'print(f"max acceleration = {df.Acceleration.max()}")\n'
        'print("slowest car:", df.loc[df.Acceleration.idxmax(), "Name"])',
        t6_stdout,
        t6_interp,
    )
    c.add_insight(
        t6,
        f"{outlier_name} is an extreme acceleration outlier at 23.5 seconds to 60 mph.",
        ["outlier", "extremum", "outlier"],
        [
            c.ref(t6, "text", "clear outlier", 1),
            c.ref(t6, "code_output", f"slowest car: {outlier_name}"),
        ],
        ["Acceleration"],
        [{"kind": "sort", "detail": "max acceleration lookup"}],
        3,
        "single striking anomaly",
        ("t4", "Power and Build"),
        c.new_sub("Power and Build", 1, "Acceleration Patterns", "How quickly the cars get moving."),
        jitter=4,
        expect_transition="shift",
    )

    # ---- turn 7: origin mix (proportion) + horsepower spread (distribution) ---
    t7_stdout = (
        f"USA {origin_counts['USA']}\nJapan {origin_counts['Japan']}\n"
        f"Europe {origin_counts['Europe']}\n"
        f"Horsepower mean {hp_mean}, sd {hp_sd}"
    )
    t7_interp = (
        f"American cars make up half the sample ({origin_counts['USA']} of 32); "
        "Japan and Europe split the rest evenly. Horsepower is moderately "
        f"dispersed around {hp_mean} (sd {hp_sd}), reflecting the mix of 4, 6, "
        "and 8 cylinder engines."
    )
    t7 = c.code_turn(
        "What is the mix of origins, and how spread out is horsepower?",
        "I will count cars per origin and describe the horsepower spread.",
        'import pandas as pd\ndf = pd.read_csv("data.csv")\n'
        'print(df.Origin.value_counts().to_string())\n'
        'print(f"Horsepower mean {df.Horsepower.mean():.1f}, sd {df.Horsepower.std(ddof=0):.1f}")',
        t7_stdout,
        t7_interp,
    )
    c.add_insight(
        t7,
        f"American cars account for half the sample ({origin_counts['USA']} of 32 cars).",
        ["proportion"],
        [
            c.ref(t7, "text", "make up half the sample", 1),
            c.ref(t7, "code_output", f"USA {origin_counts['USA']}"),
        ],
        ["Origin"],
        [{"kind": "aggregation", "detail": "row counts per Origin"}],
        2,
        "simple composition fact",
        c.new_main("Fleet Composition", "What kinds of cars the sample contains."),
        c.new_sub("Fleet Composition", 0, "Origin Mix", "Share of cars per producing region."),
        jitter=5,
        expect_transition="retain",
    )
    c.add_insight(
        t7,
        f"Horsepower varies moderately around a mean of {hp_mean} (sd {hp_sd}).",
        ["distribution"],
        [
            c.ref(t7, "text", "moderately", 1),
            c.ref(t7, "code_output", f"Horsepower mean {hp_mean}, sd {hp_sd}"),
        ],
        ["Horsepower"],
        [{"kind": "aggregation", "detail": "mean and stddev of Horsepower"}],
        3,
        "dispersion context for power comparisons",
        ("t4", "Power and Build"),
        ("t5", "Power versus Weight"),
        jitter=6,
        expect_transition="retain",
    )

    # ---- turn 8: horsepower extremum by origin --------------------------------
    t8_stdout = "mean Horsepower by Origin\n" + "\n".join(
        f"{o} {hp_by_origin[o]}" for o in ("Europe", "Japan", "USA")
    )
    t8_interp = (
        f"American cars lead on power with {hp_by_origin['USA']} horsepower on "
        f"average, far ahead of Europe ({hp_by_origin['Europe']}) and Japan "
        f"({hp_by_origin['Japan']}). The USA group tops the horsepower ranking."
    )
    t8 = c.code_turn(
        "Which origin builds the most powerful cars?",
        "I will rank the origins by average horsepower.",
        'import pandas as pd\ndf = pd.read_csv("data.csv")\n'
        'print("mean Horsepower by Origin")\n'
        'print(df.groupby("Origin")["Horsepower"].mean().round(1).to_string(header=False))',
        t8_stdout,
        t8_interp,
    )
    c.add_insight(
        t8,
        f"American cars have the highest average horsepower ({hp_by_origin['USA']}).",
        ["extremum", "difference", "extremum"],
        [
            c.ref(t8, "text", "tops the horsepower ranking", 1),
            c.ref(t8, "code_output", f"USA {hp_by_origin['USA']}"),
        ],
        ["Horsepower", "Origin"],
        [{"kind": "aggregation", "detail": "mean Horsepower by Origin"},
         {"kind": "sort", "detail": "rank origins by mean horsepower"}],
        4,
        "top-of-ranking fact tied to the build theme",
        ("t4", "Power and Build"),
        c.new_sub("Power and Build", 2, "Power by Origin", "Average engine power per region."),
        jitter=7,
        expect_transition="continue",
    )

    # ---- turn 9: displacement difference + MPG spread --------------------------
    t9_stdout = (
        "mean Displacement by Origin\n"
        + "\n".join(f"{o} {disp_by_origin[o]}" for o in ("Europe", "Japan", "USA"))
        + f"\nMPG coefficient of variation = {mpg_cv}"
    )
    t9_interp = (
        f"American engines are much larger: {disp_by_origin['USA']} cubic inches "
        f"on average versus roughly {disp_by_origin['Japan']} for Japanese cars. "
        f"Meanwhile MPG itself varies a fair amount (coefficient of variation "
        f"{mpg_cv}) across the fleet."
    )
    t9 = c.code_turn(
        "Compare engine sizes across origins, and how variable is MPG overall?",
        "I will compare displacement by origin and quantify MPG spread.",
        'import pandas as pd\ndf = pd.read_csv("data.csv")\n'
        'print("mean Displacement by Origin")\n'
        'print(df.groupby("Origin")["Displacement"].mean().round(1).to_string(header=False))\n'
        'print(f"MPG coefficient of variation = {df.MPG.std(ddof=0)/df.MPG.mean():.3f}")',
        t9_stdout,
        t9_interp,
    )
    c.add_insight(
        t9,
        f"American engines average {disp_by_origin['USA']} cubic inches, far larger "
        "than Japanese or European engines.",
        ["difference"],
        [
            c.ref(t9, "text", "American engines are much larger", 1),
            c.ref(t9, "code_output", f"USA {disp_by_origin['USA']}"),
        ],
        ["Displacement", "Origin"],
        [{"kind": "aggregation", "detail": "mean Displacement by Origin"}],
        4,
        "stark size gap between regions",
        c.new_main("Engine Size", "Displacement and what it implies."),
        c.new_sub("Engine Size", 0, "Displacement by Origin", "Engine volume per region."),
        jitter=8,
        expect_transition="continue",
    )
    c.add_insight(
        t9,
        f"Fleet MPG is fairly variable, with a coefficient of variation of {mpg_cv}.",
        ["distribution"],
        [
            c.ref(t9, "text", "varies a fair amount", 1),
            c.ref(t9, "code_output", f"MPG coefficient of variation = {mpg_cv}"),
        ],
        ["MPG"],
        [{"kind": "derive", "detail": "coefficient of variation of MPG"}],
        2,
        "background dispersion fact",
        ("t1", "Fuel Efficiency"),
        c.new_sub("Fuel Efficiency", 3, "Efficiency Spread", "How widely MPG varies."),
        jitter=9,
        expect_transition="retain",
    )

    # ---- turn 10: weight extremum + MPG-horsepower correlation -----------------
    t10_stdout = (
        "mean Weight by Origin\n"
        + "\n".join(f"{o} {int(weight_by_origin[o])}" for o in ("Europe", "Japan", "USA"))
        + f"\ncorr(MPG, Horsepower) = {r_mpg_hp}"
    )
    t10_interp = (
        f"American cars are also the heaviest at {int(weight_by_origin['USA'])} "
        "pounds on average, the top of the weight ranking. And power costs "
        f"efficiency: MPG and Horsepower correlate at r = {r_mpg_hp}."
    )
    t10 = c.code_turn(
        "Which cars are heaviest, and does power cost efficiency?",
        "I will rank weight by origin and correlate MPG with horsepower.",
        'import pandas as pd\ndf = pd.read_csv("data.csv")\n'
        'print("mean Weight by Origin")\n'
        'print(df.groupby("Origin")["Weight"].mean().round(0).astype(int).to_string(header=False))\n'
        'print(f"corr(MPG, Horsepower) = {df.MPG.corr(df.Horsepower):.3f}")',
        t10_stdout,
        t10_interp,
    )
    c.add_insight(
        t10,
        f"American cars are the heaviest group, averaging {int(weight_by_origin['USA'])} pounds.",
        ["extremum"],
        [
            c.ref(t10, "text", "top of the weight ranking", 1),
            c.ref(t10, "code_output", f"USA {int(weight_by_origin['USA'])}"),
        ],
        ["Weight", "Origin"],
        [{"kind": "aggregation", "detail": "mean Weight by Origin"}],
        3,
        "completes the origin build picture",
        ("t4", "Power and Build"),
        c.new_sub("Power and Build", 3, "Weight by Origin", "Average curb weight per region."),
        jitter=10,
        expect_transition="retain",
    )
    c.add_insight(
        t10,
        f"More powerful cars are less efficient: MPG and Horsepower correlate at r = {r_mpg_hp}.",
        ["correlation", "correlation", "difference"],
        [
            c.ref(t10, "text", "power costs", 1),
            c.ref(t10, "code_output", f"corr(MPG, Horsepower) = {r_mpg_hp}"),
        ],
        ["MPG", "Horsepower"],
        [{"kind": "derive", "detail": "Pearson correlation of MPG with Horsepower"}],
        5,
        "core efficiency trade-off of the whole analysis",
        ("t1", "Fuel Efficiency"),
        ("t6", "Efficiency Drivers"),
        jitter=11,
        expect_transition="retain",
    )

    # -- assemble ie replies in turn order -------------------------------------
    per_turn: dict[int, list[dict]] = {}
    for record in c.insights:
        per_turn.setdefault(record["turn"], []).append(record["delta"])
    ie_replies: list[str] = []
    for turn_id in range(1, len(c.turns) + 1):
        if turn_id == 4:
            ie_replies.append(refine_reply)
        elif turn_id in per_turn:
            ie_replies.append(json.dumps(per_turn[turn_id]))
        else:
            ie_replies.append("[]")
    c.ie_replies = ie_replies

    # -- audits -----------------------------------------------------------------
    audit_transitions(c)
    audit_topics(c)

    # -- serialize ----------------------------------------------------------------
    analysis_entries: list = []
    for info in c.turns:
        for i, response in enumerate(info["responses"]):
            size = info.get("chunk", 0)
            if i == 0 and size:
                analysis_entries.append({"content": response, "chunks": chunked(response, size)})
            else:
                analysis_entries.append(response)

    bundle = {
        "queries": [info["query"] for info in c.turns],
        "gateway": {
            "chat": {
                "analysis": analysis_entries,
                "ie_agent": c.ie_replies,
                "io_agent": c.io_replies,
                "semantic_score": c.score_replies,
            },
            "embeddings": c.embeddings,
        },
        "executor": {"executions": c.executions},
    }
    out = FIXTURES / "cars"
    out.mkdir(parents=True, exist_ok=True)
    (out / "cars.csv").write_text(rows_to_csv(rows), encoding="utf-8")
    (out / "fixture.json").write_text(json.dumps(bundle, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"cars: {len(c.turns)} turns, {len(c.insights)} new insights + 1 refinement, "
          f"{len(c.topic_vectors)} topics, {len(c.executions)} executions")


def audit_transitions(c: Cars) -> None:
    seen: list[set] = []
    for record in c.insights:
        attrs = record["attrs"]
        if not seen:
            got = "initial"
        elif attrs & seen[-1]:
            got = "continue"
        elif any(attrs & earlier for earlier in seen[:-1]):
            got = "retain"
        else:
            got = "shift"
        assert got == record["expect_transition"], (
            f"designed transition mismatch for {record['delta']['summary']!r}: "
            f"expected {record['expect_transition']}, sequence gives {got}"
        )
        seen.append(attrs)


def audit_topics(c: Cars) -> None:
    mains = [t for t in c.main_axis]
    for i, a in enumerate(mains):
        for b in mains[i + 1 :]:
            sim = cosine(c.topic_vectors[a], c.topic_vectors[b])
            assert sim <= 0.55, f"main topics {a!r} vs {b!r} too similar: {sim:.3f}"
    # sibling subtopics share a parent axis component but distinct own axes
    by_parent: dict[int, list[str]] = {}
    for title, vector in c.topic_vectors.items():
        if title in c.main_axis:
            continue
        parent_axis = max(range(4), key=lambda i: abs(vector[i]))
        by_parent.setdefault(parent_axis, []).append(title)
    for siblings in by_parent.values():
        for i, a in enumerate(siblings):
            for b in siblings[i + 1 :]:
                sim = cosine(c.topic_vectors[a], c.topic_vectors[b])
                assert sim <= 0.55, f"subtopics {a!r} vs {b!r} too similar: {sim:.3f}"


# ---------------------------------------------------------------------------
# negative bundle: designed evidence drops + one degraded insight
# ---------------------------------------------------------------------------


def build_negative() -> None:
    response = (
        "Average weight differs a lot between origins. The heaviest group is "
        "American at about 3000 pounds."
    )
    deltas = [
        {
            "action": "identify_new",
            "summary": "American cars are the heaviest group on average.",
            "category_votes": ["extremum"],
            "evidence": [
                # resolves verbatim
                {"turn_id": 1, "block_index": 0, "quote": "The heaviest group is American"},
                # off by one character ("weigth"): designed drop 1
                {"turn_id": 1, "block_index": 0, "quote": "Average weigth differs a lot"},
                # block index out of range: designed drop 2
                {"turn_id": 1, "block_index": 7, "quote": "3000 pounds"},
            ],
        },
        {
            "action": "identify_new",
            "summary": "Weight varies widely between individual cars.",
            "category_votes": ["distribution"],
            "evidence": [
                # quote not present anywhere: designed drop 3
                {"turn_id": 1, "block_index": 0, "quote": "standard deviation of 840"},
                # char_range end past the block: designed drop 4
                {"turn_id": 1, "block_index": 0, "char_range": [0, 100000]},
            ],
        },
    ]
    bundle = {
        "queries": ["Summarize the weight differences."],
        "gateway": {
            "chat": {
                "analysis": [response],
                "ie_agent": [json.dumps(deltas)],
                "io_agent": [
                    json.dumps({"attributes": ["Weight", "Origin"], "actions": [
                        {"kind": "aggregation", "detail": "mean Weight by Origin"}]}),
                    json.dumps({"generated": {"title": "Weight Profile",
                                              "description": "How heavy the cars are."}}),
                    json.dumps({"generated": {"title": "Heaviest Group",
                                              "description": "Which region builds the heaviest cars."}}),
                    json.dumps({"attributes": ["Weight"], "actions": [
                        {"kind": "derive", "detail": "weight spread"}]}),
                    json.dumps({"selected": "t1"}),
                    json.dumps({"generated": {"title": "Weight Spread",
                                              "description": "Variation in curb weight."}}),
                ],
                "semantic_score": ["3: plain comparison", "2: vague spread claim"],
            },
            "embeddings": {
                "American cars are the heaviest group on average.": [1.0, 0.1, 0.0],
                "Weight varies widely between individual cars.": [0.8, 0.5, 0.1],
                "Weight Profile: How heavy the cars are.": [1.0, 0.0, 0.0],
                "Heaviest Group: Which region builds the heaviest cars.": [0.0, 1.0, 0.0],
                "Weight Spread: Variation in curb weight.": [0.0, 0.0, 1.0],
            },
        },
        "executor": {"executions": []},
        "designed": {"dropped_refs": 4, "degraded_insights": 1},
    }
    out = FIXTURES / "negative"
    out.mkdir(parents=True, exist_ok=True)
    (out / "fixture.json").write_text(json.dumps(bundle, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print("negative: 4 designed drops, 1 degraded insight")


# ---------------------------------------------------------------------------
# threshold bundle: first generated title lands at similarity 0.60
# ---------------------------------------------------------------------------


def build_threshold() -> None:
    response_1 = "City cars in this sample are far more efficient than trucks."
    response_2 = "Acceleration varies little; most cars reach speed in 11 to 14 seconds."
    bundle = {
        "queries": ["Compare efficiency of cars and trucks.", "Anything on acceleration?"],
        "gateway": {
            "chat": {
                "analysis": [response_1, response_2],
                "ie_agent": [
                    json.dumps([{
                        "action": "identify_new",
                        "summary": "City cars are far more efficient than trucks.",
                        "category_votes": ["difference"],
                        "evidence": [{"turn_id": 1, "block_index": 0,
                                      "quote": "far more efficient than trucks"}],
                    }]),
                    json.dumps([{
                        "action": "identify_new",
                        "summary": "Acceleration is tightly clustered between 11 and 14 seconds.",
                        "category_votes": ["distribution"],
                        "evidence": [{"turn_id": 2, "block_index": 0,
                                      "quote": "11 to 14 seconds"}],
                    }]),
                ],
                "io_agent": [
                    json.dumps({"attributes": ["MPG"], "actions": [
                        {"kind": "aggregation", "detail": "mean MPG by body type"}]}),
                    json.dumps({"generated": {"title": "Fuel Efficiency",
                                              "description": "How efficient the vehicles are."}}),
                    json.dumps({"generated": {"title": "Efficiency Basics",
                                              "description": "Core efficiency comparisons."}}),
                    json.dumps({"attributes": ["Acceleration"], "actions": [
                        {"kind": "derive", "detail": "acceleration spread"}]}),
                    # first candidate sits at similarity 0.60 to "Fuel Efficiency":
                    # above the ceiling, must be rejected and regenerated
                    json.dumps({"generated": {"title": "Gas Mileage Patterns",
                                              "description": "Patterns in fuel use."}}),
                    json.dumps({"generated": {"title": "Acceleration Behavior",
                                              "description": "How quickly vehicles get moving."}}),
                    json.dumps({"generated": {"title": "Speed Pickup",
                                              "description": "Time needed to reach speed."}}),
                ],
                "semantic_score": ["4: central comparison", "2: narrow spread note"],
            },
            "embeddings": {
                "City cars are far more efficient than trucks.": [0.95, 0.31225, 0.0],
                "Acceleration is tightly clustered between 11 and 14 seconds.": [0.0, 0.2, 0.9798],
                "Fuel Efficiency: How efficient the vehicles are.": [1.0, 0.0, 0.0],
                "Efficiency Basics: Core efficiency comparisons.": [0.0, 1.0, 0.0],
                # cos with Fuel Efficiency = 0.6 exactly: rejected
                "Gas Mileage Patterns: Patterns in fuel use.": [0.6, 0.0, 0.8],
                # cos with Fuel Efficiency = 0.1: accepted
                "Acceleration Behavior: How quickly vehicles get moving.": [0.1, 0.0, 0.994987],
                "Speed Pickup: Time needed to reach speed.": [0.0, 0.0, 1.0],
            },
        },
        "executor": {"executions": []},
        "designed": {"regenerations": 1, "rejected_title": "Gas Mileage Patterns"},
    }
    out = FIXTURES / "threshold"
    out.mkdir(parents=True, exist_ok=True)
    (out / "fixture.json").write_text(json.dumps(bundle, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print("threshold: 1 designed regeneration at similarity 0.60")


# ---------------------------------------------------------------------------
# evaluation label files with the reference arithmetic
# ---------------------------------------------------------------------------


def build_labels() -> None:
    out = FIXTURES / "labels"
    out.mkdir(parents=True, exist_ok=True)

    ids = [f"e{i}" for i in range(1, 105)]
    snapshot = {"insights": [{"insight_id": i} for i in ids]}
    (out / "snapshot_104.json").write_text(json.dumps(snapshot) + "\n", encoding="utf-8")

    labels_104 = {
        "labeled_insights": [
            {"label_id": f"L{i}", "description": f"labeled finding {i}",
             "matched_insight": ids[i - 1]}
            for i in range(1, 105)
        ],
        "evidence_marks": {i: (n < 92) for n, i in enumerate(ids)},
        "context_marks": {i: (n < 92) for n, i in enumerate(ids)},
        "topic_marks": {i: (n < 95) for n, i in enumerate(ids)},
    }
    (out / "labels_104.json").write_text(json.dumps(labels_104, indent=2) + "\n", encoding="utf-8")

    labels_10 = {
        "labeled_insights": [
            {"label_id": f"L{i}", "description": f"labeled finding {i}",
             "matched_insight": f"e{i}" if i <= 9 else None}
            for i in range(1, 11)
        ],
        "evidence_marks": {},
        "context_marks": {},
        "topic_marks": {},
    }
    (out / "labels_10.json").write_text(json.dumps(labels_10, indent=2) + "\n", encoding="utf-8")
    print("labels: 92/104, 95/104, and 9/10 files")


if __name__ == "__main__":
    build_cars()
    build_negative()
    build_threshold()
    build_labels()
