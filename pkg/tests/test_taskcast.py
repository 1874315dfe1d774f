"""Exact text grammars for the three casts, and the corpus-level stream."""

from collections import Counter

import pytest

from wdkit.corpus import (
    Dialogue,
    GoldTurn,
    NextStep,
    Speaker,
    StepDomain,
    Utterance,
    Workflow,
    WorkflowStep,
)
from wdkit.errors import (
    EmptyDialogue,
    MalformedCorpus,
    MissingGoldFields,
    NotAnActionTurn,
)
from wdkit.taskcast import (
    CastConfig,
    CastSample,
    Task,
    cast_ast,
    cast_cds,
    cast_corpus,
    cast_wd,
    read_cast_jsonl,
    write_cast_jsonl,
)

DOMAIN = StepDomain(
    (("s1", "do the first thing"), ("s2", "do the second thing"), ("s3", "do the third")),
    "toy",
)


def _dialogue(steps=None, turns=(), texts=("hello there", "general kenobi")):
    utterances = tuple(Utterance(Speaker.AGENT, t) for t in texts)
    workflow = None if steps is None else Workflow(tuple(steps))
    return Dialogue("d1", utterances, tuple(turns), workflow)


# ------------------------------------------------------------------ workflow


def test_wd_input_without_domain():
    sample = cast_wd(_dialogue(steps=[]), DOMAIN, CastConfig())
    assert sample.input_text == "Extract workflow: Dialogue: hello there general kenobi"
    assert sample.task is Task.WD
    assert sample.id == "d1"


def test_wd_input_with_domain_unshuffled():
    cfg = CastConfig(include_domain=True, shuffle=False)
    sample = cast_wd(_dialogue(steps=[]), DOMAIN, cfg)
    assert sample.input_text == (
        "Extract workflow: Dialogue: hello there general kenobi"
        " Steps: do the first thing,do the second thing,do the third"
    )


def test_wd_target_mixes_bare_and_valued_steps():
    steps = [
        WorkflowStep("s1", "do the first thing", ("v1", "v2")),
        WorkflowStep("s2", "do the second thing"),
    ]
    sample = cast_wd(_dialogue(steps=steps), DOMAIN, CastConfig())
    assert sample.target_text == "Flow: do the first thing: v1;v2,do the second thing"


def test_wd_empty_workflow_target_is_bare_prefix():
    sample = cast_wd(_dialogue(steps=[]), DOMAIN, CastConfig())
    assert sample.target_text == "Flow: "


def test_wd_values_can_be_switched_off():
    steps = [WorkflowStep("s1", "do the first thing", ("v1",))]
    sample = cast_wd(_dialogue(steps=steps), DOMAIN, CastConfig(include_values=False))
    assert sample.target_text == "Flow: do the first thing"


def test_wd_names_mode_applies_to_domain_and_target():
    steps = [WorkflowStep("s2", "do the second thing", ("v",))]
    cfg = CastConfig(include_domain=True, shuffle=False, use_names_not_descriptions=True)
    sample = cast_wd(_dialogue(steps=steps), DOMAIN, cfg)
    assert sample.input_text.endswith(" Steps: s1,s2,s3")
    assert sample.target_text == "Flow: s2: v"


def test_wd_shuffle_is_deterministic_per_seed_and_id():
    steps = [WorkflowStep("s1", "do the first thing")]
    cfg = CastConfig(include_domain=True, shuffle_seed=3)
    first = cast_wd(_dialogue(steps=steps), DOMAIN, cfg)
    second = cast_wd(_dialogue(steps=steps), DOMAIN, cfg)
    assert first.input_text == second.input_text


def test_wd_shuffle_preserves_the_description_multiset():
    cfg_a = CastConfig(include_domain=True, shuffle_seed=0)
    cfg_b = CastConfig(include_domain=True, shuffle_seed=1)
    listed_a = cast_wd(_dialogue(steps=[]), DOMAIN, cfg_a).input_text.split(" Steps: ")[1]
    listed_b = cast_wd(_dialogue(steps=[]), DOMAIN, cfg_b).input_text.split(" Steps: ")[1]
    assert Counter(listed_a.split(",")) == Counter(DOMAIN.descriptions())
    assert Counter(listed_b.split(",")) == Counter(DOMAIN.descriptions())


def test_wd_requires_utterances():
    with pytest.raises(EmptyDialogue):
        cast_wd(_dialogue(steps=[], texts=()), DOMAIN, CastConfig())


def test_wd_requires_gold_workflow():
    with pytest.raises(MissingGoldFields):
        cast_wd(_dialogue(steps=None), DOMAIN, CastConfig())


def test_cast_config_shuffle_needs_seed():
    with pytest.raises(ValueError):
        CastConfig(include_domain=True)
    CastConfig(include_domain=True, shuffle=False)  # fine without a seed
    CastConfig(include_domain=True, shuffle_seed=0)


def test_wd_flags_delimiters_in_values_and_labels():
    steps = [WorkflowStep("s1", "do the first thing", ("bad,value", "worse;value"))]
    notes = []
    cast_wd(_dialogue(steps=steps), DOMAIN, CastConfig(), notes)
    assert {n.code for n in notes} == {"delimiter_collision"}
    assert len(notes) == 2


# -------------------------------------------------------------------- action


def _action_dialogue():
    texts = ("hi I need help", "sure which order", "order 4512 please", "done")
    turns = (
        GoldTurn(
            2,
            "check_shipping",
            NextStep.TAKE_ACTION,
            action_name="shipping-status",
            action_values=("4512",),
        ),
        GoldTurn(3, "check_shipping", NextStep.END_CONVERSATION),
    )
    return _dialogue(steps=[], turns=turns, texts=texts)


def test_ast_input_is_history_strictly_before_the_turn():
    dialogue = _action_dialogue()
    sample = cast_ast(dialogue, dialogue.gold_turns[0])
    assert sample.input_text == "Extract AST: hi I need help sure which order"
    assert "order 4512 please" not in sample.input_text
    assert sample.id == "d1:2"


def test_ast_target_shapes():
    dialogue = _action_dialogue()
    sample = cast_ast(dialogue, dialogue.gold_turns[0])
    assert sample.target_text == "AST: shipping-status:4512"
    bare = GoldTurn(1, "i", NextStep.TAKE_ACTION, action_name="search-faq")
    sample = cast_ast(_dialogue(steps=[], turns=(bare,)), bare)
    assert sample.target_text == "AST: search-faq"


def test_ast_multi_value_join():
    turn = GoldTurn(
        1,
        "i",
        NextStep.TAKE_ACTION,
        action_name="verify-identity",
        action_values=("Norman fox", "norman233", "5550001111"),
    )
    sample = cast_ast(_dialogue(steps=[], turns=(turn,)), turn)
    assert sample.target_text == "AST: verify-identity:Norman fox, norman233, 5550001111"


def test_ast_rejects_non_action_turns():
    dialogue = _action_dialogue()
    with pytest.raises(NotAnActionTurn):
        cast_ast(dialogue, dialogue.gold_turns[1])


def test_ast_flags_comma_values():
    turn = GoldTurn(
        0, "i", NextStep.TAKE_ACTION, action_name="record-reason", action_values=("a,b",)
    )
    notes = []
    cast_ast(_dialogue(steps=[], turns=(turn,), texts=("x",)), turn, None, notes)
    assert [n.code for n in notes] == ["delimiter_collision"]


# ---------------------------------------------------------------------- turn


def test_cds_retrieve_turn_grammar():
    turn = GoldTurn(
        1,
        "ask_policy",
        NextStep.RETRIEVE_UTTERANCE,
        candidate_utterances=("one fine reply", "another reply"),
        gold_utterance="another reply",
    )
    dialogue = _dialogue(steps=[], turns=(turn,), texts=("hi", "another reply"))
    sample = cast_cds(dialogue, turn)
    assert sample.input_text == (
        "Extract CDS: History: hi Candidates: one fine reply,another reply"
    )
    assert sample.target_text == "CDS: ask_policy,retrieve_utterance,another reply"


def test_cds_action_turn_reuses_the_action_tail():
    turn = GoldTurn(
        1,
        "request_refund",
        NextStep.TAKE_ACTION,
        action_name="offer-refund",
        action_values=("40 dollars",),
    )
    dialogue = _dialogue(steps=[], turns=(turn,), texts=("hi", "refunding"))
    sample = cast_cds(dialogue, turn)
    assert sample.target_text == "CDS: request_refund,take_action,offer-refund:40 dollars"
    assert "Candidates:" not in sample.input_text


def test_cds_end_turn_has_no_payload():
    turn = GoldTurn(1, "ask_policy", NextStep.END_CONVERSATION)
    dialogue = _dialogue(steps=[], turns=(turn,), texts=("hi", "bye"))
    sample = cast_cds(dialogue, turn)
    assert sample.target_text == "CDS: ask_policy,end_conversation"


def test_cds_requires_intent():
    turn = GoldTurn(1, None, NextStep.END_CONVERSATION)
    dialogue = _dialogue(steps=[], turns=(turn,), texts=("hi", "bye"))
    with pytest.raises(MissingGoldFields):
        cast_cds(dialogue, turn)


# ------------------------------------------------------------- corpus stream


def test_cast_corpus_wd_yields_one_sample_per_dialogue(abcd_corpus):
    cfg = CastConfig(include_domain=True, shuffle_seed=0)
    samples = list(cast_corpus(abcd_corpus, Task.WD, cfg))
    assert [s.id for s in samples] == [d.id for d in abcd_corpus.dialogues]
    assert all(s.task is Task.WD for s in samples)


def test_cast_corpus_ast_covers_exactly_the_action_turns(abcd_corpus):
    samples = list(cast_corpus(abcd_corpus, Task.AST, CastConfig()))
    expected = [
        f"{d.id}:{t.turn_index}"
        for d in abcd_corpus.dialogues
        for t in d.gold_turns
        if t.nextstep is NextStep.TAKE_ACTION
    ]
    assert [s.id for s in samples] == expected


def test_cast_corpus_cds_covers_every_annotated_turn(abcd_corpus):
    samples = list(cast_corpus(abcd_corpus, Task.CDS, CastConfig()))
    expected = [f"{d.id}:{t.turn_index}" for d in abcd_corpus.dialogues for t in d.gold_turns]
    assert [s.id for s in samples] == expected


def test_cast_corpus_turns_failures_into_diagnostics(abcd_corpus):
    bad_turn = GoldTurn(0, None, NextStep.END_CONVERSATION)  # no intent
    bad = Dialogue("broken", (Utterance(Speaker.AGENT, "x"),), (bad_turn,))
    corpus = type(abcd_corpus)(
        (bad,) + abcd_corpus.dialogues[:2], abcd_corpus.domain, abcd_corpus.split_tag
    )
    notes = []
    samples = list(cast_corpus(corpus, Task.CDS, CastConfig(), notes))
    assert [n.code for n in notes] == ["cast_error"]
    assert samples  # the stream continued past the failure
    assert all(not s.id.startswith("broken") for s in samples)


# --------------------------------------------------------------------- jsonl


def test_cast_jsonl_round_trip(tmp_path, abcd_corpus):
    cfg = CastConfig(include_domain=True, shuffle_seed=0)
    samples = list(cast_corpus(abcd_corpus, Task.WD, cfg))
    path = tmp_path / "cast.jsonl"
    assert write_cast_jsonl(samples, path) == len(samples)
    assert read_cast_jsonl(path) == samples


def test_cast_jsonl_skips_blank_lines(tmp_path):
    path = tmp_path / "cast.jsonl"
    row = '{"id": "a", "task": "wd", "input": "x", "target": "Flow: "}'
    path.write_text(f"{row}\n\n{row}\n", encoding="utf-8")
    assert len(read_cast_jsonl(path)) == 2


def test_cast_jsonl_reports_bad_line_number(tmp_path):
    path = tmp_path / "cast.jsonl"
    good = '{"id": "a", "task": "wd", "input": "x", "target": "Flow: "}'
    path.write_text(f"{good}\nnot json\n", encoding="utf-8")
    with pytest.raises(MalformedCorpus) as err:
        read_cast_jsonl(path)
    assert ":2:" in str(err.value)


def test_cast_jsonl_rejects_missing_keys(tmp_path):
    path = tmp_path / "cast.jsonl"
    path.write_text('{"id": "a", "task": "wd"}\n', encoding="utf-8")
    with pytest.raises(MalformedCorpus) as err:
        read_cast_jsonl(path)
    assert ":1:" in str(err.value)


def test_cast_jsonl_rejects_unknown_task(tmp_path):
    path = tmp_path / "cast.jsonl"
    path.write_text(
        '{"id": "a", "task": "qa", "input": "x", "target": "y"}\n', encoding="utf-8"
    )
    with pytest.raises(MalformedCorpus):
        read_cast_jsonl(path)


def test_cast_sample_is_hashable_record():
    sample = CastSample("a", Task.WD, "in", "out")
    assert sample == CastSample("a", Task.WD, "in", "out")
    assert hash(sample)
