"""Smoke test for the xattr_py extension module.

Build and install first:  pip install ./crates/python --no-build-isolation
Then run:                 python python/smoke_test.py
"""

import json

import xattr_py as x


def main():
    assert x.normalize("  ＨＥＬＳＩＮＫＩ\t on ") == "helsinki on"
    assert x.exact_match("Strasse", ["STRASSE"])
    assert x.exact_match("straße", ["STRASSE"])
    try:
        x.exact_match("a", [])
    except ValueError:
        pass
    else:
        raise AssertionError("empty gold list must raise")

    premise, hypothesis = x.build_prompt("Kuka?", "Lönnrot", "Lönnrot kokosi Kalevalan.")
    assert premise == "Lönnrot kokosi Kalevalan."
    assert hypothesis == 'the answer to the question "Kuka?" is "Lönnrot"'

    assert x.roc_auc([0.1, 0.4, 0.35, 0.8], [False, False, True, True]) == 0.75
    threshold, accuracy = x.calibrate_threshold([0.1, 0.4, 0.35, 0.8], [False, False, True, True])
    assert x.accuracy_at([0.1, 0.4, 0.35, 0.8], [False, False, True, True], threshold) == accuracy
    assert round(x.relative_improvement(27.9, 39.2), 1) == 40.5

    example = {
        "example_id": "hc-01",
        "query": "What is the capital of Kenya?",
        "query_language": "en",
        "answer": "Nairobi",
        "gold_answers": ["Nairobi"],
        "passages": [
            {"passage_id": "p1", "text": "Nairobi is the capital of Kenya.", "language": "en", "retrieval_rank": 1},
            {"passage_id": "p2", "text": "Mombasa is a port city.", "language": "en", "retrieval_rank": 2},
        ],
    }
    checked = json.loads(x.validate_example(json.dumps(example)))
    assert checked["answer_type"] == "short_span"
    assert x.string_match_scores(json.dumps(example)) == [1.0, 0.0]

    ratings = "\n".join(
        json.dumps(
            {
                "example_id": "hc-01",
                "passage_id": "p1",
                "rater_id": f"r{i}",
                "scenario": "in_language",
                "interpretable": True,
                "attributed": vote,
                "flagged": False,
            }
        )
        for i, vote in enumerate([True, True, False])
    )
    judgments = [json.loads(line) for line in x.aggregate_ratings(ratings).splitlines()]
    assert len(judgments) == 1 and judgments[0]["label"] in (1, True)

    task = {
        "doc_id": "d",
        "language": "fi",
        "query": "Mikä?",
        "answer": "x",
        "positive_passage_id": "s1",
        "passages": [{"passage_id": f"s{i}", "text": f"lause {i}"} for i in range(1, 6)],
    }
    pairs = [json.loads(line) for line in x.mine_negatives(json.dumps(task), 2, 7).splitlines()]
    assert len(pairs) == 3 and pairs[0]["passage_id"] == "s1"
    assert pairs == [json.loads(line) for line in x.mine_negatives(json.dumps(task), 2, 7).splitlines()]

    print("xattr_py smoke test passed")


if __name__ == "__main__":
    main()
