#!/usr/bin/env python3
# Copyright 2026 The nl2vi Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

# Writes the question-filter count fixture: per domain, generated questions
# with the text-QA and entailment evidence the filter sees. Under the default
# filter settings exactly the listed number of questions of each kind
# survive. Drops mix mismatched binary answers, unanswerable questions and
# open answers with low entailment; kept open questions mix exact matches
# and entailed paraphrases.
#
# usage: make_filter_count_fixture.py OUT.jsonl

import json
import random
import sys

COUNTS = {
    "recipes": {"binary": (392, 386), "open": (233, 174)},
    "wikihow": {"binary": (403, 388), "open": (222, 158)},
}

OBJECTS = {
    "recipes": ["bowl", "plate", "spoon", "fork", "tomato", "onion", "cheese", "bread", "pan", "pot",
                "knife", "lemon", "basil", "rice", "egg", "cup", "salad", "sauce", "pepper", "carrot"],
    "wikihow": ["person", "hand", "table", "shovel", "tree", "car", "tire", "brush", "wall", "mirror",
                "tie", "laptop", "desk", "book", "door", "window", "towel", "sink", "ladder", "box"],
}
OPEN = [("what color is the {o}?", "red", "crimson", "blue"),
        ("what is on the {o}?", "a cloth", "a towel", "nothing"),
        ("where is the {o}?", "on the table", "on a table", "in a drawer"),
        ("what is the {o} made of?", "wood", "timber", "glass")]


def main(out_path):
    rng = random.Random(20240501)
    lines = []
    for domain, kinds in COUNTS.items():
        n = 0
        for kind, (total, kept) in kinds.items():
            dropped = total - kept
            flags = [True] * kept + [False] * dropped
            rng.shuffle(flags)
            for i, keep in enumerate(flags):
                n += 1
                obj = OBJECTS[domain][i % len(OBJECTS[domain])]
                rec = {"domain": domain, "qid": f"{domain}.{kind}.{n:04d}"}
                if kind == "binary":
                    rec.update(text=f"is there a {obj}?", expected="yes")
                    if keep:
                        rec.update(qa_answer=rng.choice(["yes", "Yes", "yes."]), answerable=True, entail=1.0)
                    elif i % 3 == 0:
                        rec.update(qa_answer="", answerable=False, entail=0.0)
                    else:
                        rec.update(qa_answer="no", answerable=True, entail=round(rng.uniform(0.0, 0.9), 6))
                else:
                    template, expected, paraphrase, wrong = OPEN[i % len(OPEN)]
                    rec.update(text=template.format(o=obj), expected=expected)
                    if keep and i % 2 == 0:
                        rec.update(qa_answer=expected, answerable=True, entail=1.0)
                    elif keep:
                        rec.update(qa_answer=paraphrase, answerable=True, entail=round(rng.uniform(0.5, 1.0), 6))
                    elif i % 4 == 1:
                        rec.update(qa_answer="", answerable=False, entail=0.0)
                    else:
                        rec.update(qa_answer=wrong, answerable=True, entail=round(rng.uniform(0.0, 0.499), 6))
                lines.append(rec)
    with open(out_path, "w") as f:
        for rec in lines:
            f.write(json.dumps(rec, sort_keys=True) + "\n")


if __name__ == "__main__":
    main(sys.argv[1])
