#!/usr/bin/env python3
"""Generate the synthetic fixture corpus and linguistic resources in data/.

Everything is derived from one seeded RNG, so re-running produces identical
files. The corpus is built so that a bag-of-ngrams classifier trained on it
leans on a single keyword per toxic text: every toxic template has a benign
mirror with the same context and a benign keyword in the slot. Each keyword
cluster has a few common members (used in the corpus) and many rare members
(present only in the embeddings and lexicon).
"""

import argparse
import csv
import pathlib
import random

import numpy as np

SEED = 20240611
DIM = 16

# cluster name -> (region, POS, common members, rare members)
CLUSTERS = {
    "off_adj": ("toxic", "ADJ",
                ["stupid", "dumb", "idiotic", "pathetic", "worthless", "useless"],
                ["moronic", "brainless", "witless", "dimwitted", "clueless", "foolish", "senseless",
                 "mindless", "dopey", "boneheaded", "asinine", "imbecilic", "halfwitted", "vapid",
                 "inane", "obtuse", "daft", "vacuous"]),
    "off_noun": ("toxic", "NOUN",
                 ["idiot", "moron", "loser", "clown", "fool"],
                 ["imbecile", "dimwit", "nitwit", "halfwit", "dunce", "buffoon", "simpleton", "dolt",
                  "numbskull", "blockhead", "bonehead", "cretin", "ignoramus", "nincompoop", "twit",
                  "oaf", "jerk", "creep"]),
    "hate_noun": ("hate", "NOUN",
                  ["vermin", "parasites", "scum", "filth", "trash"],
                  ["pests", "rats", "cockroaches", "leeches", "lowlifes", "dregs", "garbage", "rubbish",
                   "swine", "savages", "mongrels", "plague", "degenerates", "maggots", "roaches",
                   "bloodsuckers", "sewage", "riffraff"]),
    "hate_adj": ("hate", "ADJ",
                 ["disgusting", "subhuman", "inferior", "filthy"],
                 ["revolting", "vile", "repulsive", "loathsome", "despicable", "wretched", "abhorrent",
                  "sickening", "detestable", "contemptible", "odious", "foul", "nasty", "putrid",
                  "degenerate", "depraved", "barbaric", "primitive"]),
    "ben_adj": ("benign", "ADJ",
                ["nice", "great", "lovely", "wonderful", "amazing", "fantastic", "brilliant", "kind",
                 "smart", "helpful", "awesome", "beautiful", "cool", "friendly"],
                ["delightful", "splendid", "superb", "terrific", "marvelous", "excellent", "charming",
                 "pleasant", "gracious", "generous", "thoughtful", "caring", "cheerful", "gentle"]),
    "ben_noun": ("benign", "NOUN",
                 ["friend", "neighbor", "teacher", "guy", "chef", "artist", "player", "writer", "host",
                  "coach"],
                 ["companion", "mentor", "buddy", "pal", "colleague", "partner", "volunteer", "leader",
                  "singer", "dancer"]),
    "topic": ("topic", "NOUN",
              ["movie", "game", "song", "book", "recipe", "garden", "photo", "video", "story", "park",
               "concert", "trip", "match", "show", "album", "festival"],
              ["film", "novel", "painting", "poem", "museum", "gallery", "beach", "journey"]),
    "ben_verb": ("verbs", "VERB",
                 ["watch", "visit", "try", "read", "see", "share"],
                 ["enjoy", "explore", "attend", "discover", "check", "recommend"]),
}

IDENTITIES = {
    "male": "men",
    "female": "women",
    "black": "black people",
    "white": "white people",
    "heterosexual": "straight people",
    "homosexual": "gay people",
}

CONTEXT_WORDS = {
    "honestly": "ADV", "seriously": "ADV", "really": "ADV", "today": "ADV", "totally": "ADV",
    "everyone": "PRON", "nobody": "PRON", "person": "NOUN", "thing": "NOUN", "people": "NOUN",
    "country": "NOUN", "post": "NOUN", "comment": "NOUN", "weekend": "NOUN", "thread": "NOUN",
    "knows": "VERB", "cares": "VERB", "think": "VERB", "say": "VERB", "stop": "VERB",
    "posting": "VERB", "met": "VERB", "came": "VERB", "go": "VERB", "get": "VERB", "rid": "VERB",
    "trust": "VERB", "keep": "VERB", "thanks": "NOUN", "sharing": "VERB", "looks": "VERB",
    "sounds": "VERB", "made": "VERB", "ever": "ADV", "back": "ADV", "never": "ADV", "always": "ADV",
    "total": "ADJ", "absolute": "ADJ", "whole": "ADJ", "single": "ADJ", "every": "ADJ",
    "shut": "VERB", "stuff": "NOUN", "men": "NOUN", "women": "NOUN", "black": "ADJ",
    "white": "ADJ", "straight": "ADJ", "gay": "ADJ", "town": "NOUN", "again": "ADV",
    "lol": "OTHER", "wow": "OTHER", "ok": "OTHER", "yeah": "OTHER",
}

# Templates: {k} is the keyword slot, {g} an identity phrase, {t} a topic,
# {n} a benign person noun. Each pattern is used with a toxic keyword for
# toxic rows and a benign keyword for the mirror rows.
OFF_ADJ_TEMPLATES = [
    "you are such a {k} person and everyone knows it",
    "honestly that is the most {k} thing i have ever read",
    "seriously stop posting this {k} stuff in every thread",
    "wow what a {k} comment from you again",
    "your {t} was {k} and nobody cares what you think",
    "this whole thread is {k} and you know it",
]
OFF_NOUN_TEMPLATES = [
    "shut up you total {k} nobody asked you",
    "you are a {k} and everyone here knows it",
    "only a {k} would post this in the thread",
    "seriously you absolute {k} stop posting",
    "what a {k} you are lol",
]
HATE_ADJ_TEMPLATES = [
    "all {g} are {k} and should go back where they came from",
    "{g} are {k} and we should never trust them",
    "honestly {g} are so {k} in this country",
    "every single one of those {g} is {k}",
]
HATE_NOUN_TEMPLATES = [
    "{g} are {k} and we should get rid of them",
    "those {g} are nothing but {k} in this town",
    "never trust {g} they are {k} every single one",
    "keep the {k} out of our country all {g} included",
]
PLAIN_BENIGN_TEMPLATES = [
    "i think the {t} looks {b} today",
    "thanks for sharing this {t} it was {b}",
    "we should {v} the {t} again this weekend",
    "my {n} made a {b} {t} yesterday",
    "has anyone else seen the new {t} yet",
    "the {t} in town sounds {b} lol",
]

MULTILABEL_LABELS = ["toxic", "obscene", "threat", "insult", "identity_hate"]

OBSCENE = ["crap", "damn", "bloody", "freaking", "frigging"]
OBSCENE_RARE = ["darn", "dang", "flipping", "effing", "bleeping", "crud", "heck", "blasted"]
THREAT = ["hurt", "destroy", "smash", "crush", "punch"]
THREAT_RARE = ["beat", "wreck", "pummel", "thrash", "clobber", "batter", "maim", "bash"]

STOPWORDS = [
    "a", "about", "above", "after", "again", "against", "ain", "all", "am", "an", "and", "any",
    "are", "aren", "aren't", "as", "at", "be", "because", "been", "before", "being", "below",
    "between", "both", "but", "by", "can", "couldn", "couldn't", "d", "did", "didn", "didn't",
    "do", "does", "doesn", "doesn't", "doing", "don", "don't", "down", "during", "each", "few",
    "for", "from", "further", "had", "hadn", "hadn't", "has", "hasn", "hasn't", "have", "haven",
    "haven't", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
    "i", "if", "in", "into", "is", "isn", "isn't", "it", "it's", "its", "itself", "just", "ll",
    "m", "ma", "me", "mightn", "mightn't", "more", "most", "mustn", "mustn't", "my", "myself",
    "needn", "needn't", "no", "nor", "not", "now", "o", "of", "off", "on", "once", "only", "or",
    "other", "our", "ours", "ourselves", "out", "over", "own", "re", "s", "same", "shan",
    "shan't", "she", "she's", "should", "should've", "shouldn", "shouldn't", "so", "some",
    "such", "t", "than", "that", "that'll", "the", "their", "theirs", "them", "themselves",
    "then", "there", "these", "they", "this", "those", "through", "to", "too", "under", "until",
    "up", "ve", "very", "was", "wasn", "wasn't", "we", "were", "weren", "weren't", "what",
    "when", "where", "which", "while", "who", "whom", "why", "will", "with", "won", "won't",
    "wouldn", "wouldn't", "y", "you", "you'd", "you'll", "you're", "you've", "your", "yours",
    "yourself", "yourselves",
]

HOMOGLYPHS = {
    "a": "а", "c": "с", "e": "е3", "i": "і1", "l": "1ⅼ", "o": "о0",
    "p": "р", "s": "ѕ5", "x": "х", "y": "у", "d": "ԁ", "h": "һ",
    "j": "ј", "b": "6", "g": "9", "t": "7", "z": "2",
}

KEYBOARD_ROWS = ["qwertyuiop", "asdfghjkl", "zxcvbnm"]


def keyboard_neighbors():
    pos = {}
    for r, row in enumerate(KEYBOARD_ROWS):
        for c, ch in enumerate(row):
            pos[ch] = (r, c)
    out = {}
    for ch, (r, c) in pos.items():
        nbs = []
        for dr, dc in [(0, 1), (0, -1), (-1, 0), (-1, 1), (1, 0), (1, -1)]:
            rr, cc = r + dr, c + dc
            if 0 <= rr < len(KEYBOARD_ROWS) and 0 <= cc < len(KEYBOARD_ROWS[rr]):
                nbs.append(KEYBOARD_ROWS[rr][cc])
        out[ch] = "".join(nbs)
    return out


def build_embeddings(rng):
    """Region centre + cluster centre + word noise, so a keyword's nearest
    neighbours are its own cluster, then its region."""
    regions = {}
    vectors = {}

    def unit(v):
        return v / np.linalg.norm(v)

    def region(name):
        if name not in regions:
            regions[name] = unit(rng.standard_normal(DIM))
        return regions[name]

    for name, (reg, _pos, common, rare) in CLUSTERS.items():
        centre = unit(2.0 * region(reg) + 0.8 * unit(rng.standard_normal(DIM)))
        for w in common + rare:
            vectors[w] = centre + 0.22 * unit(rng.standard_normal(DIM))
    for group, words in [("obscene", OBSCENE + OBSCENE_RARE), ("threat", THREAT + THREAT_RARE)]:
        centre = unit(2.0 * region(group) + 0.8 * unit(rng.standard_normal(DIM)))
        for w in words:
            vectors[w] = centre + 0.22 * unit(rng.standard_normal(DIM))
    ctx = region("context")
    for w in list(CONTEXT_WORDS) + STOPWORDS:
        if w not in vectors:
            vectors[w] = 0.6 * ctx + unit(rng.standard_normal(DIM))
    return vectors


def fill(template, rng, keyword, benign=False):
    g_key = rng.choice(sorted(IDENTITIES))
    text = template.format(
        k=keyword,
        g=IDENTITIES[g_key],
        t=rng.choice(CLUSTERS["topic"][2]),
        n=rng.choice(CLUSTERS["ben_noun"][2]),
        b=rng.choice(CLUSTERS["ben_adj"][2]),
        v=rng.choice(CLUSTERS["ben_verb"][2]),
    )
    mentions = set()
    for key, phrase in IDENTITIES.items():
        if "{g}" in template and key == g_key:
            mentions.add(key)
    return text, mentions


def decorate(text, rng):
    r = rng.random()
    if r < 0.25:
        text = text[0].upper() + text[1:]
    if rng.random() < 0.3:
        text += rng.choice([".", "!", "!!", "?"])
    return text


def toxic_row(rng, kind):
    """kind in {offensive, hate}; returns (text, mentions, template, slot_cluster)."""
    if kind == "offensive":
        if rng.random() < 0.55:
            tpl, cl = rng.choice(OFF_ADJ_TEMPLATES), "off_adj"
        else:
            tpl, cl = rng.choice(OFF_NOUN_TEMPLATES), "off_noun"
    else:
        if rng.random() < 0.5:
            tpl, cl = rng.choice(HATE_ADJ_TEMPLATES), "hate_adj"
        else:
            tpl, cl = rng.choice(HATE_NOUN_TEMPLATES), "hate_noun"
    kw = rng.choice(CLUSTERS[cl][2])
    text, mentions = fill(tpl, rng, kw)
    return text, mentions, tpl, cl


def mirror_row(rng, tpl, cl):
    benign_cluster = "ben_adj" if CLUSTERS[cl][1] == "ADJ" else "ben_noun"
    kw = rng.choice(CLUSTERS[benign_cluster][2])
    return fill(tpl, rng, kw, benign=True)


def plain_benign(rng):
    return fill(rng.choice(PLAIN_BENIGN_TEMPLATES), rng, "")


def multiclass_rows(rng, n_offensive, n_hate, n_mirror, n_plain, exclude=frozenset()):
    rows = []
    seen = set(exclude)

    def add(text, label, mentions):
        if text in seen:
            return False
        seen.add(text)
        rows.append((text, label, mentions))
        return True

    templates = []
    while sum(1 for r in rows if r[1] == 1) < n_offensive:
        text, m, tpl, cl = toxic_row(rng, "offensive")
        if add(decorate(text, rng), 1, m):
            templates.append((tpl, cl))
    while sum(1 for r in rows if r[1] == 2) < n_hate:
        text, m, tpl, cl = toxic_row(rng, "hate")
        if add(decorate(text, rng), 2, m):
            templates.append((tpl, cl))
    mirrors = 0
    while mirrors < n_mirror:
        tpl, cl = templates[mirrors % len(templates)]
        text, m = mirror_row(rng, tpl, cl)
        if add(decorate(text, rng), 0, m):
            mirrors += 1
    plain = 0
    while plain < n_plain:
        text, m = plain_benign(rng)
        if add(decorate(text, rng), 0, m):
            plain += 1
    rng.shuffle(rows)
    return rows


def write_multiclass(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["text", "label"] + ["identity_" + g for g in IDENTITIES])
        for text, label, mentions in rows:
            w.writerow([text, label] + [1 if g in mentions else 0 for g in IDENTITIES])


def multilabel_rows(rng, n):
    """Insult / threat / obscene / identity-hate rows plus benign mirrors."""
    rows = []
    seen = set()
    while len(rows) < n:
        r = rng.random()
        labels = dict.fromkeys(MULTILABEL_LABELS, 0)
        if r < 0.5:
            text, m = plain_benign(rng) if rng.random() < 0.3 else mirror_row(
                rng, rng.choice(OFF_ADJ_TEMPLATES), "off_adj")
        elif r < 0.65:
            text, m, _, _ = toxic_row(rng, "offensive")
            labels.update(toxic=1, insult=1)
        elif r < 0.77:
            text, m, _, _ = toxic_row(rng, "hate")
            labels.update(toxic=1, identity_hate=1)
        elif r < 0.89:
            text = "i will {k} you if you post that again".format(k=rng.choice(THREAT))
            m = set()
            labels.update(toxic=1, threat=1)
        else:
            text = "this {k} {t} is a waste of time".format(
                k=rng.choice(OBSCENE), t=rng.choice(CLUSTERS["topic"][2]))
            m = set()
            labels.update(toxic=1, obscene=1)
        text = decorate(text, rng)
        if text in seen:
            continue
        seen.add(text)
        rows.append((text, labels, m))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rng = random.Random(SEED)
    nrng = np.random.default_rng(SEED)

    vectors = build_embeddings(nrng)
    with open(out / "embeddings.txt", "w", encoding="utf-8") as f:
        for w in sorted(vectors):
            f.write(w + " " + " ".join(f"{x:.5f}" for x in vectors[w]) + "\n")

    with open(out / "synonyms.tsv", "w", encoding="utf-8") as f:
        f.write("# word<TAB>comma-separated synonyms\n")
        for name, (_reg, _pos, common, rare) in CLUSTERS.items():
            for w in common:
                syn = [x for x in rare if rng.random() < 0.5][:6] or rare[:2]
                f.write(w + "\t" + ",".join(syn) + "\n")

    with open(out / "pos.tsv", "w", encoding="utf-8") as f:
        f.write("# word<TAB>tag\n")
        tags = {}
        for name, (_reg, pos, common, rare) in CLUSTERS.items():
            for w in common + rare:
                tags.setdefault(w, pos)
        for w in OBSCENE + OBSCENE_RARE:
            tags.setdefault(w, "ADJ")
        for w in THREAT + THREAT_RARE:
            tags.setdefault(w, "VERB")
        for w, t in CONTEXT_WORDS.items():
            tags.setdefault(w, t)
        for w in ["i", "you", "we", "they", "me", "them", "it"]:
            tags.setdefault(w, "PRON")
        for w in sorted(tags):
            f.write(f"{w}\t{tags[w]}\n")

    with open(out / "stopwords.txt", "w", encoding="utf-8") as f:
        f.write("\n".join(STOPWORDS) + "\n")

    with open(out / "homoglyphs.tsv", "w", encoding="utf-8") as f:
        f.write("# char<TAB>look-alike variants\n")
        for c in sorted(HOMOGLYPHS):
            f.write(f"{c}\t{HOMOGLYPHS[c]}\n")

    with open(out / "keyboard.tsv", "w", encoding="utf-8") as f:
        f.write("# char<TAB>adjacent QWERTY keys\n")
        for c, nbs in sorted(keyboard_neighbors().items()):
            f.write(f"{c}\t{nbs}\n")

    corpus = multiclass_rows(rng, n_offensive=150, n_hate=100, n_mirror=200, n_plain=50)
    write_multiclass(out / "corpus_multiclass.csv", corpus)
    seeds = multiclass_rows(rng, n_offensive=30, n_hate=20, n_mirror=0, n_plain=0,
                            exclude=frozenset(t for t, _, _ in corpus))
    write_multiclass(out / "seeds_multiclass.csv", seeds)

    ml = multilabel_rows(rng, 300)
    with open(out / "corpus_multilabel.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["text"] + MULTILABEL_LABELS + ["identity_" + g for g in IDENTITIES])
        for text, labels, mentions in ml:
            w.writerow([text] + [labels[k] for k in MULTILABEL_LABELS]
                       + [1 if g in mentions else 0 for g in IDENTITIES])


if __name__ == "__main__":
    main()
