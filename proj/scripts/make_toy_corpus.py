#!/usr/bin/env python3
"""Generate the bundled toy corpus (data/toy.jsonl) from sentence templates."""

import argparse
import json
import random
from pathlib import Path

PEOPLE = [("boy", "boy"), ("girl", "girl"), ("teacher", "teacher"), ("doctor", "doctor"),
          ("soldier", "soldier")]
INTRANSITIVE = [("sleeps", "sleep", "sleep-01"), ("runs", "run", "run-02"),
                ("leaves", "leave", "leave-11"), ("laughs", "laugh", "laugh-01")]
GOALS = [("go", "go-02"), ("sleep", "sleep-01"), ("eat", "eat-01"), ("leave", "leave-11")]
FOODS = ["fish", "bread", "rice", "apple"]
NAMES = [("John", "person"), ("Mary", "person"), ("Paris", "city"), ("Berlin", "city"),
         ("Tom", "person")]
NUMBERS = [("two", 2), ("three", 3), ("five", 5)]
ANIMALS = ["cat", "dog", "bird"]


def tok(token, lemma=None, pos="NN", ner="O"):
    return (token, lemma if lemma is not None else token.lower(), pos, ner)


def record(tokens, amr):
    return {
        "tokens": [t[0] for t in tokens],
        "lemmas": [t[1] for t in tokens],
        "pos": [t[2] for t in tokens],
        "ner": [t[3] for t in tokens],
        "amr": amr,
    }


def want_to(person, goal):
    # Control verb: the wanter is also the goer.
    (p, _), (g, gc) = person, goal
    toks = [tok("The", "the", "DT"), tok(p), tok("wants", "want", "VBZ"), tok("to", "to", "TO"),
            tok(g, g, "VB"), tok(".", ".", ".")]
    return record(toks, f"(w / want-01 :ARG0 (p / {p}) :ARG1 (g / {gc} :ARG0 p))")


def negated(person, verb):
    (p, _), (_, lemma, concept) = person, verb
    toks = [tok("The", "the", "DT"), tok(p), tok("does", "do", "VBZ"), tok("not", "not", "RB"),
            tok(lemma, lemma, "VB"), tok(".", ".", ".")]
    return record(toks, f"(v / {concept} :polarity - :ARG0 (p / {p}))")


def visit(a, b):
    (na, ka), (nb, kb) = a, b
    ner = {"person": "PERSON", "city": "LOCATION"}
    toks = [tok(na, na, "NNP", ner[ka]), tok("visited", "visit", "VBD"), tok(nb, nb, "NNP", ner[kb]),
            tok(".", ".", ".")]
    return record(toks, f'(v / visit-01 :ARG0 (x / {ka} :name (n / name :op1 "{na}")) '
                        f':ARG1 (y / {kb} :name (m / name :op1 "{nb}")))')


def ended_on(day):
    toks = [tok("The", "the", "DT"), tok("meeting", "meeting"), tok("ended", "end", "VBD"),
            tok("on", "on", "IN"), tok("the", "the", "DT"), tok(str(day), str(day), "CD", "DATE"),
            tok(".", ".", ".")]
    return record(toks, f"(e / end-01 :ARG1 (m / meet-03) :time (d / date-entity :day {day}))")


def gave_up(person, habit):
    (p, _) = person
    verb, concept = habit
    toks = [tok("The", "the", "DT"), tok(p), tok("gave", "give", "VBD"), tok("up", "up", "RP"),
            tok(verb, concept.rsplit("-", 1)[0], "VBG"), tok(".", ".", ".")]
    return record(toks, f"(g / give-up-07 :ARG0 (p / {p}) :ARG1 (h / {concept} :ARG0 p))")


def went_back(person):
    (p, _) = person
    toks = [tok("The", "the", "DT"), tok(p), tok("went", "go", "VBD"), tok("back", "back", "RB"),
            tok(".", ".", ".")]
    return record(toks, f"(g / go-back-19 :ARG1 (p / {p}))")


def counted(number, animal, food):
    word, value = number
    toks = [tok(word.capitalize(), word, "CD"), tok(animal + "s", animal, "NNS"),
            tok("eat", "eat", "VBP"), tok(food), tok(".", ".", ".")]
    return record(toks, f"(e / eat-01 :ARG0 (a / {animal} :quant {value}) :ARG1 (f / {food}))")


def who_verb(person, verb, main):
    (p, _), (vt, _, vc), (mt, _, mc) = person, verb, main
    toks = [tok("The", "the", "DT"), tok(p), tok("who", "who", "WP"),
            tok(vt, vt.removesuffix("s"), "VBZ"), tok(mt, mt.removesuffix("s"), "VBZ"),
            tok(".", ".", ".")]
    return record(toks, f"(m / {mc} :ARG0 (p / {p} :ARG0-of (v / {vc})))")


def build(count, seed):
    rng = random.Random(seed)
    makers = [
        lambda: want_to(rng.choice(PEOPLE), rng.choice(GOALS)),
        lambda: negated(rng.choice(PEOPLE), rng.choice(INTRANSITIVE)),
        lambda: visit(*rng.sample(NAMES, 2)),
        lambda: ended_on(rng.randint(1, 28)),
        lambda: gave_up(rng.choice(PEOPLE), rng.choice([("smoking", "smoke-02"),
                                                        ("drinking", "drink-01")])),
        lambda: went_back(rng.choice(PEOPLE)),
        lambda: counted(rng.choice(NUMBERS), rng.choice(ANIMALS), rng.choice(FOODS)),
        lambda: who_verb(rng.choice(PEOPLE), *rng.sample(INTRANSITIVE, 2)),
    ]
    seen, out = set(), []
    attempt = 0
    while len(out) < count:
        if attempt > 100 * count:
            raise SystemExit("templates cannot produce that many distinct sentences")
        rec = makers[attempt % len(makers)]()
        attempt += 1
        key = " ".join(rec["tokens"])
        if key in seen:
            continue
        seen.add(key)
        out.append(rec)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "toy.jsonl"))
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    records = build(args.count, args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r) + "\n")
    print(f"wrote {len(records)} examples to {args.out}")


if __name__ == "__main__":
    main()
