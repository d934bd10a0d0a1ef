#!/usr/bin/env python3
"""Regenerate the small fixture corpus and evaluation files in fixtures/.

The treebank is produced from a handful of sentence templates over word
groups with distinct selectional preferences, so words from the same group
share dependency contexts. Output is deterministic.
"""

import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures"

GROUPS = {
    "animal": ["dog", "puppy", "cat", "kitten", "horse"],
    "person": ["scientist", "teacher", "student", "doctor"],
    "vehicle": ["car", "truck", "bus"],
    "food": ["bread", "cake", "apple", "soup"],
    "place": ["city", "town", "village", "field"],
}
ADJ = {
    "size": ["big", "large", "huge", "small", "tiny"],
    "speed": ["fast", "quick", "slow"],
    "quality": ["good", "great", "bad"],
    "temp": ["hot", "warm", "cold"],
}
VERB = {
    "eat": ["eat", "devour", "consume"],
    "see": ["see", "watch", "observe"],
    "build": ["build", "construct", "make"],
    "move": ["run", "jog", "walk"],
    "speak": ["say", "tell"],
}
# subject group -> verb groups, object groups and adjective groups it takes
PREFS = {
    "animal": (["eat", "move", "see"], ["food"], ["size", "speed"]),
    "person": (["build", "see", "eat"], ["vehicle", "food"], ["quality"]),
    "vehicle": (["move"], [], ["speed", "size"]),
}
OBJ_ADJ = {"food": ["temp", "quality"], "vehicle": ["speed", "size"], "place": ["size"]}
OBJ_VERBS = {"food": ["eat", "build"], "vehicle": ["build", "see"]}
NUMS = ["two", "three", "four"]
ADVS = ["quickly", "slowly", "often"]


class Sent:
    def __init__(self):
        self.toks = []

    def add(self, form, upos, head=None, rel=None):
        self.toks.append([form, upos, head, rel])
        return len(self.toks)

    def set(self, i, head, rel):
        self.toks[i - 1][2] = head
        self.toks[i - 1][3] = rel

    def conllu(self, sid):
        text = " ".join(t[0] for t in self.toks)
        lines = [f"# sent_id = {sid}", f"# text = {text}"]
        for i, (form, upos, head, rel) in enumerate(self.toks, 1):
            lines.append(f"{i}\t{form}\t{form.lower()}\t{upos}\t_\t_\t{head}\t{rel}\t_\t_")
        return "\n".join(lines) + "\n"


def pick(rng, xs):
    return rng.choice(xs)


def adj(rng, groups):
    return pick(rng, ADJ[pick(rng, groups)])


def noun_phrase(s, rng, group, adjs=None, det="the"):
    """Adds det (+ adjective) + noun; returns the noun index and the indexes
    that must be attached to it."""
    d = s.add(det, "DET")
    a = s.add(adj(rng, adjs), "ADJ") if adjs else None
    n = s.add(pick(rng, GROUPS[group]), "NOUN")
    s.set(d, n, "det")
    if a:
        s.set(a, n, "amod")
    return n


def template_transitive(rng):
    sg = pick(rng, ["animal", "person"])
    vgroups, ogroups, agroups = PREFS[sg]
    og = pick(rng, ogroups)
    vg = pick(rng, [v for v in vgroups if v in OBJ_VERBS[og]] or vgroups)
    s = Sent()
    subj = noun_phrase(s, rng, sg, agroups if rng.random() < 0.7 else None)
    aux = s.add("will", "AUX")
    v = s.add(pick(rng, VERB[vg]), "VERB", 0, "root")
    obj = noun_phrase(s, rng, og, OBJ_ADJ[og] if rng.random() < 0.7 else None)
    s.set(subj, v, "nsubj")
    s.set(aux, v, "aux")
    s.set(obj, v, "dobj")
    if rng.random() < 0.6:
        case = s.add(pick(rng, ["in", "near"]), "ADP")
        pl = noun_phrase(s, rng, "place", OBJ_ADJ["place"] if rng.random() < 0.5 else None)
        s.set(case, pl, "case")
        s.set(pl, v, "nmod")
    p = s.add(".", "PUNCT", v, "punct")
    return s


def template_coord_subject(rng):
    sg = pick(rng, ["animal", "person", "vehicle"])
    vgroups, _, _ = PREFS[sg]
    s = Sent()
    a = s.add(pick(rng, GROUPS[sg]), "NOUN")
    cc = s.add("and", "CCONJ")
    b = s.add(pick(rng, [w for w in GROUPS[sg] if w != s.toks[a - 1][0]]), "NOUN")
    aux = s.add("will", "AUX")
    v = s.add(pick(rng, VERB[pick(rng, vgroups)]), "VERB", 0, "root")
    s.set(a, v, "nsubj")
    s.set(cc, b, "cc")
    s.set(b, a, "conj")
    s.set(aux, v, "aux")
    if rng.random() < 0.5:
        adv = s.add(pick(rng, ADVS), "ADV", v, "advmod")
    s.add(".", "PUNCT", v, "punct")
    return s


def template_coord_verb(rng):
    sg = pick(rng, ["animal", "person"])
    vgroups, ogroups, _ = PREFS[sg]
    og = pick(rng, ogroups)
    vg = pick(rng, [v for v in vgroups if v in OBJ_VERBS[og]] or vgroups)
    s = Sent()
    subj = noun_phrase(s, rng, sg)
    aux = s.add("will", "AUX")
    v1w = pick(rng, VERB[vg])
    v1 = s.add(v1w, "VERB", 0, "root")
    cc = s.add("and", "CCONJ")
    v2 = s.add(pick(rng, [w for w in VERB[vg] if w != v1w]), "VERB")
    obj = noun_phrase(s, rng, og)
    s.set(subj, v1, "nsubj")
    s.set(aux, v1, "aux")
    s.set(cc, v2, "cc")
    s.set(v2, v1, "conj")
    s.set(obj, v1, "dobj")
    s.add(".", "PUNCT", v1, "punct")
    return s


def template_coord_adj(rng):
    sg = pick(rng, ["animal", "vehicle", "food"])
    agroups = PREFS[sg][2] if sg in PREFS else OBJ_ADJ[sg]
    ag = pick(rng, agroups)
    s = Sent()
    d = s.add("the", "DET")
    a1w = pick(rng, ADJ[ag])
    a1 = s.add(a1w, "ADJ")
    cc = s.add("and", "CCONJ")
    a2 = s.add(pick(rng, [w for w in ADJ[ag] if w != a1w]), "ADJ")
    n = s.add(pick(rng, GROUPS[sg]), "NOUN")
    cop = s.add("is", "AUX")
    pred = s.add(pick(rng, ["here", "there"]), "ADV", 0, "root")
    s.set(d, n, "det")
    s.set(a1, n, "amod")
    s.set(cc, a2, "cc")
    s.set(a2, a1, "conj")
    s.set(n, pred, "nsubj")
    s.set(cop, pred, "cop")
    s.add(".", "PUNCT", pred, "punct")
    return s


def template_appos(rng):
    sg = pick(rng, ["animal", "person"])
    vgroups, _, _ = PREFS[sg]
    s = Sent()
    subj = noun_phrase(s, rng, sg)
    c1 = s.add(",", "PUNCT")
    d = s.add("a", "DET")
    ap = s.add(pick(rng, GROUPS[sg]), "NOUN")
    c2 = s.add(",", "PUNCT")
    aux = s.add("will", "AUX")
    v = s.add(pick(rng, VERB[pick(rng, vgroups)]), "VERB", 0, "root")
    s.set(c1, ap, "punct")
    s.set(d, ap, "det")
    s.set(ap, subj, "appos")
    s.set(c2, ap, "punct")
    s.set(subj, v, "nsubj")
    s.set(aux, v, "aux")
    s.add(".", "PUNCT", v, "punct")
    return s


def template_nummod(rng):
    sg = pick(rng, ["animal", "vehicle"])
    s = Sent()
    num = s.add(pick(rng, NUMS), "NUM")
    subj = s.add(pick(rng, GROUPS[sg]), "NOUN")
    aux = s.add("will", "AUX")
    v = s.add(pick(rng, VERB["move"]), "VERB", 0, "root")
    case = s.add("in", "ADP")
    pl = noun_phrase(s, rng, "place", OBJ_ADJ["place"] if rng.random() < 0.5 else None)
    s.set(num, subj, "nummod")
    s.set(subj, v, "nsubj")
    s.set(aux, v, "aux")
    s.set(case, pl, "case")
    s.set(pl, v, "nmod")
    s.add(".", "PUNCT", v, "punct")
    return s


def template_compound(rng):
    s = Sent()
    d = s.add("the", "DET")
    mod = s.add(pick(rng, GROUPS["place"]), "NOUN")
    sg = pick(rng, ["vehicle", "person"])
    subj = s.add(pick(rng, GROUPS[sg]), "NOUN")
    aux = s.add("will", "AUX")
    vg = pick(rng, PREFS[sg][0])
    v = s.add(pick(rng, VERB[vg]), "VERB", 0, "root")
    adv = s.add(pick(rng, ADVS), "ADV", v, "advmod")
    s.set(d, subj, "det")
    s.set(mod, subj, "compound")
    s.set(subj, v, "nsubj")
    s.set(aux, v, "aux")
    s.add(".", "PUNCT", v, "punct")
    return s


def template_xcomp(rng):
    sg = "person"
    og = pick(rng, ["vehicle", "food"])
    vg = pick(rng, OBJ_VERBS[og])
    s = Sent()
    subj = noun_phrase(s, rng, sg)
    root = s.add(pick(rng, ["wants", "tries"]), "VERB", 0, "root")
    mark = s.add("to", "PART")
    v = s.add(pick(rng, VERB[vg]), "VERB")
    obj = noun_phrase(s, rng, og, OBJ_ADJ[og])
    s.set(subj, root, "nsubj")
    s.set(mark, v, "mark")
    s.set(v, root, "xcomp")
    s.set(obj, v, "dobj")
    s.add(".", "PUNCT", root, "punct")
    return s


def template_relcl(rng):
    sg = pick(rng, ["animal", "vehicle"])
    vgroups, _, agroups = PREFS[sg]
    s = Sent()
    subj = noun_phrase(s, rng, sg)
    that = s.add("that", "PRON")
    aux = s.add("will", "AUX")
    v = s.add(pick(rng, VERB[pick(rng, vgroups)]), "VERB")
    cop = s.add("is", "AUX")
    pred = s.add(adj(rng, agroups), "ADJ", 0, "root")
    s.set(that, v, "nsubj")
    s.set(aux, v, "aux")
    s.set(v, subj, "acl:relcl")
    s.set(subj, pred, "nsubj")
    s.set(cop, pred, "cop")
    s.add(".", "PUNCT", pred, "punct")
    return s


def template_ccomp(rng):
    s = Sent()
    subj = noun_phrase(s, rng, "person")
    root = s.add(pick(rng, VERB["speak"]), "VERB", 0, "root")
    mark = s.add("that", "SCONJ")
    sg = pick(rng, ["animal", "vehicle"])
    inner = noun_phrase(s, rng, sg)
    aux = s.add("will", "AUX")
    v = s.add(pick(rng, VERB["move"]), "VERB")
    s.set(subj, root, "nsubj")
    s.set(mark, v, "mark")
    s.set(inner, v, "nsubj")
    s.set(aux, v, "aux")
    s.set(v, root, "ccomp")
    s.add(".", "PUNCT", root, "punct")
    return s


TEMPLATES = [
    (template_transitive, 30),
    (template_coord_subject, 12),
    (template_coord_verb, 12),
    (template_coord_adj, 12),
    (template_appos, 6),
    (template_nummod, 8),
    (template_compound, 6),
    (template_xcomp, 6),
    (template_relcl, 6),
    (template_ccomp, 6),
]

SIMILARITY = [
    ("big", "large", 9.2, "A"),
    ("big", "huge", 8.5, "A"),
    ("small", "tiny", 9.0, "A"),
    ("fast", "quick", 9.1, "A"),
    ("hot", "warm", 7.9, "A"),
    ("good", "great", 8.0, "A"),
    ("big", "tiny", 1.2, "A"),
    ("fast", "hot", 0.5, "A"),
    ("quick", "large", 1.0, "A"),
    ("cold", "good", 1.5, "A"),
    ("eat", "devour", 8.9, "V"),
    ("eat", "consume", 8.4, "V"),
    ("see", "watch", 8.3, "V"),
    ("see", "observe", 8.0, "V"),
    ("build", "construct", 9.1, "V"),
    ("run", "jog", 8.6, "V"),
    ("walk", "run", 6.8, "V"),
    ("eat", "build", 0.6, "V"),
    ("observe", "jog", 1.1, "V"),
    ("say", "devour", 0.3, "V"),
    ("dog", "puppy", 8.6, "N"),
    ("cat", "kitten", 8.7, "N"),
    ("dog", "cat", 5.9, "N"),
    ("car", "truck", 7.6, "N"),
    ("bread", "cake", 6.1, "N"),
    ("city", "town", 8.8, "N"),
    ("teacher", "student", 4.2, "N"),
    ("doctor", "scientist", 4.8, "N"),
    ("car", "bread", 0.3, "N"),
    ("horse", "village", 0.4, "N"),
]

TOEFL = [
    ("big", ["large", "cold", "bread", "jog"], 0, "A"),
    ("fast", ["warm", "quick", "city", "say"], 1, "A"),
    ("devour", ["watch", "walk", "eat", "tiny"], 2, "V"),
    ("construct", ["observe", "run", "tell", "build"], 3, "V"),
    ("puppy", ["dog", "bus", "soup", "field"], 0, "N"),
]

CONFIG = """\
# Toy experiment over the bundled fixtures. Paths are relative to this file.
corpus = toy_treebank.conllu
dataset = toy_simlex.tsv
toefl = toy_toefl.txt
classes = A,V,N
strategy = alg1
threshold = 0.2
fold_mode = per-fold
fold_seed = 3

# extraction
window = 2
conj_variant = both
collapse_prepositions = true
collapse_relations = nmod

# training: tiny model for a tiny corpus
dim = 16
negatives = 5
initial_lr = 0.025
subsample = 0
epochs = 20
min_count = 1
seed = 1
workers = 1

cache_dir = ../target/toy-cache
output_dir = ../target/toy-out
"""


def main():
    rng = random.Random(20170811)
    pool = [t for t, w in TEMPLATES for _ in range(w)]
    rng.shuffle(pool)
    OUT.mkdir(exist_ok=True)
    text = "".join(f(rng).conllu(i + 1) + "\n" for i, f in enumerate(pool))
    (OUT / "toy_treebank.conllu").write_text(text)
    rows = ["word1\tword2\tscore\tclass"] + [f"{a}\t{b}\t{s}\t{c}" for a, b, s, c in SIMILARITY]
    (OUT / "toy_simlex.tsv").write_text("\n".join(rows) + "\n")
    lines = [f"{p} {' '.join(cs)} {g} {c}" for p, cs, g, c in TOEFL]
    (OUT / "toy_toefl.txt").write_text("\n".join(lines) + "\n")
    (OUT / "toy.conf").write_text(CONFIG)
    print(f"wrote {len(pool)} sentences to {OUT}")


if __name__ == "__main__":
    main()
