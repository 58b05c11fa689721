"""Scratch: find where the directional effects express, over free knobs."""
import itertools
import sys
import time

import numpy as np

from cmaug import (
    AugmentConfig,
    AugmentTarget,
    GenConfig,
    Mining,
    SelectionMode,
    TrainConfig,
    full_report,
    generate_synthetic,
    split_corpus,
    text_video_scores,
    train,
)


def cell(train_c, test_c, chance, criterion, text_dim, mining, seeds):
    ndcgs, maps = [], []
    for seed in seeds:
        cfg = TrainConfig(
            epochs=30, batch_size=64, embed_dim=32, text_dim=text_dim, seed=seed,
            mining=mining,
            augment=AugmentConfig(chance=chance, criterion=criterion, target=AugmentTarget.JOINT),
        )
        result = train(train_c, cfg)
        report = full_report(text_video_scores(result.encoder, result.featurizer, test_c), test_c.annotations)
        ndcgs.append(report["t-v"]["nDCG"])
        maps.append(report["t-v"]["mAP"])
    return float(np.mean(ndcgs)), float(np.mean(maps))


seeds = (0, 1)
for syn, text_dim, mining in itertools.product((2, 3, 5), (32, 64, 96), (Mining.RANDOM,)):
    config = GenConfig(verb_classes=20, noun_classes=40, synonyms_per_class=syn,
                       samples=2500, feature_dim=64, noise_scale=0.1)
    corpus = generate_synthetic(config, seed=1)
    train_c, test_c = split_corpus(corpus, 2000)
    t0 = time.time()
    n0, m0 = cell(train_c, test_c, 0.0, SelectionMode.FINE, text_dim, mining, seeds)
    nf, mf = cell(train_c, test_c, 1.0, SelectionMode.FINE, text_dim, mining, seeds)
    nc, mc = cell(train_c, test_c, 1.0, SelectionMode.COARSE, text_dim, mining, seeds)
    print(
        f"syn={syn} dt={text_dim} {mining.value}: "
        f"nDCG0={100*n0:.2f} nDCGf={100*nf:.2f} (d={100*(nf-n0):+.2f}) nDCGc={100*nc:.2f} | "
        f"mAP0={100*m0:.2f} mAPf={100*mf:.2f} mAPc={100*mc:.2f} fine>=coarse:{mf>=mc} "
        f"({time.time()-t0:.0f}s)"
    )
    sys.stdout.flush()
