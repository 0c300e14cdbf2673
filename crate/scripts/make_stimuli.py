"""Build stimulus JSONL files from marked-up sentences.

Markup: {target}  [distractor]  <critical>. Offsets are UTF-8 byte ranges.
"""
import json
import re
import sys
from pathlib import Path

MARK = re.compile(r"\{([^}]*)\}|\[([^\]]*)\]|<([^>]*)>")


def unmark(s):
    out, spans, pos = b"", {}, 0
    for m in MARK.finditer(s):
        out += s[pos:m.start()].encode()
        word = next(g for g in m.groups() if g is not None)
        kind = ["target", "distractor", "critical"][[g is not None for g in m.groups()].index(True)]
        spans[kind] = [len(out), len(out) + len(word.encode())]
        out += word.encode()
        pos = m.end()
    out += s[pos:].encode()
    return out.decode(), spans


SETS = {
    "agreement.jsonl": [
        ("commentator-rc", [
            ("int", "gram", "The [commentator] who the {viewer} <trusts> is on television every night."),
            ("non-int", "gram", "The [commentators] who the {viewer} <trusts> are on television every night."),
            ("int", "ungram", "The [commentators] who the {viewer} <trust> are on television every night."),
            ("non-int", "ungram", "The [commentator] who the {viewer} <trust> is on television every night."),
        ]),
        ("slogan-pp", [
            ("int", "gram", "The {slogan} on the [poster] <was> designed to get attention."),
            ("non-int", "gram", "The {slogan} on the [posters] <was> designed to get attention."),
            ("int", "ungram", "The {slogan} on the [posters] <were> designed to get attention."),
            ("non-int", "ungram", "The {slogan} on the [poster] <were> designed to get attention."),
        ]),
        ("executive-rc", [
            ("int", "gram", "The {executive} who oversaw the middle [manager] apparently <was> dishonest about the budget."),
            ("non-int", "gram", "The {executive} who oversaw the middle [managers] apparently <was> dishonest about the budget."),
            ("int", "ungram", "The {executive} who oversaw the middle [managers] apparently <were> dishonest about the budget."),
            ("non-int", "ungram", "The {executive} who oversaw the middle [manager] apparently <were> dishonest about the budget."),
        ]),
    ],
    "reflexive.jsonl": [
        ("coach-reflexive", [
            ("int", "gram", "The basketball {coach} who trained the star [player] usually blamed <himself> for the loss."),
            ("non-int", "gram", "The basketball {coach} who trained the star [players] usually blamed <himself> for the loss."),
            ("int", "ungram", "The basketball {coach} who trained the star [players] usually blamed <themselves> for the loss."),
            ("non-int", "ungram", "The basketball {coach} who trained the star [player] usually blamed <themselves> for the loss."),
        ]),
    ],
}


def main(out_dir):
    out_dir = Path(out_dir)
    for name, sets in SETS.items():
        lines = []
        for set_id, cells in sets:
            for interference, gram, marked in cells:
                text, spans = unmark(marked)
                lines.append(json.dumps({
                    "item_id": f"{set_id}/{interference}/{gram}",
                    "set_id": set_id,
                    "interference": interference,
                    "grammaticality": gram,
                    "text": text,
                    "critical": spans["critical"],
                    "target": spans["target"],
                    "distractor": spans["distractor"],
                }))
        (out_dir / name).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/stimuli")
