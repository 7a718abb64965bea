"""
How much labelled data does the swarm need?
===========================================

Train on growing subsets of one synthetic corpus and track the held-out
F-score and relative count error.  The command-line equivalent is

    sylrate synth --preset acceptance --n 400 --seed 3 --out corpus
    sylrate optimize corpus/manifest.json --train-size 10 25 50 100 200 --out sweep/params.json
"""

import numpy as np

from sylrate import PsoConfig, evaluate_params, gen_corpus, train_pipeline
from sylrate.synth import PRESETS

spec, ranges = PRESETS["acceptance"]
corpus = gen_corpus(300, seed=3, base_spec=spec, **ranges)
order = np.random.default_rng(3).permutation(len(corpus))
held_out = corpus.subset(sorted(order[200:]))

print(" n_train   F      SR error %   MAE")
for n in (5, 10, 25, 50, 100, 200):
    train = corpus.subset(sorted(order[:n]))
    params, _ = train_pipeline(train, "inv_f", pso_config=PsoConfig(seed=3))
    rep = evaluate_params(held_out, params)
    print(f"{n:7d}  {rep.f_score:.4f}  {rep.sr_error_rate_pct:9.2f}  {rep.mae_count:6.3f}")

# Very small sets can overfit a handful of utterances; past a few dozen the
# curve is flat.
