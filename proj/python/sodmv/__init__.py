"""Dependency grammar induction toolkit (thin wrapper over the C++ core)."""

from _sodmv import (  # noqa: F401
    Corpus,
    Grammar,
    Model,
    ParseTree,
    Sentence,
    TrainConfig,
    TrainResult,
    Vocab,
    generate,
    load_model,
    parse,
    random_grammar,
    read_corpus,
    run_cli,
    save_model,
    sentence_logprob,
    train,
    uas,
    write_corpus,
)
