"""Scratch: refine around syn=8, dt=64 with 3 seeds."""
import itertools, sys, time
import numpy as np
from cmaug import (AugmentConfig, AugmentTarget, GenConfig, Mining, SelectionMode,
                   TrainConfig, full_report, generate_synthetic, split_corpus,
                   text_video_scores, train)

def cell(train_c, test_c, chance, criterion, text_dim, seeds):
    ndcgs, maps = [], []
    for seed in seeds:
        cfg = TrainConfig(epochs=30, batch_size=64, embed_dim=32, text_dim=text_dim, seed=seed,
                          augment=AugmentConfig(chance=chance, criterion=criterion,
                                                target=AugmentTarget.JOINT))
        result = train(train_c, cfg)
        report = full_report(text_video_scores(result.encoder, result.featurizer, test_c),
                             test_c.annotations)
        ndcgs.append(report["t-v"]["nDCG"])
        maps.append(report["t-v"]["mAP"])
    return np.asarray(ndcgs), np.asarray(maps)

seeds = (0, 1, 2)
for syn, text_dim in ((6, 64), (8, 48), (8, 64), (8, 80), (10, 64), (10, 80)):
    config = GenConfig(verb_classes=20, noun_classes=40, synonyms_per_class=syn,
                       samples=2500, feature_dim=64, noise_scale=0.1)
    corpus = generate_synthetic(config, seed=1)
    train_c, test_c = split_corpus(corpus, 2000)
    t0 = time.time()
    n0, m0 = cell(train_c, test_c, 0.0, SelectionMode.FINE, text_dim, seeds)
    n25, _ = cell(train_c, test_c, 0.25, SelectionMode.FINE, text_dim, seeds)
    nf, mf = cell(train_c, test_c, 1.0, SelectionMode.FINE, text_dim, seeds)
    nc, mc = cell(train_c, test_c, 1.0, SelectionMode.COARSE, text_dim, seeds)
    d = 100 * (nf.mean() - n0.mean())
    print(f"syn={syn} dt={text_dim}: d={d:+.2f} mono:{nf.mean()>n25.mean()} "
          f"per-seed d={[f'{100*(a-b):+.2f}' for a,b in zip(nf,n0)]} "
          f"mAPf={100*mf.mean():.2f} mAPc={100*mc.mean():.2f} ok:{mf.mean()>=mc.mean()} "
          f"({time.time()-t0:.0f}s)")
    sys.stdout.flush()
