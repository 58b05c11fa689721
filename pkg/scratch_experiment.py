"""Scratch: directional behavior on the standard corpus."""
import time

import numpy as np

from cmaug import (
    AugmentConfig,
    AugmentTarget,
    GenConfig,
    SelectionMode,
    TrainConfig,
    full_report,
    generate_synthetic,
    split_corpus,
    text_video_scores,
    train,
)

config = GenConfig(verb_classes=20, noun_classes=40, samples=2500, feature_dim=64, noise_scale=0.1)
corpus = generate_synthetic(config, seed=1)
train_c, test_c = split_corpus(corpus, 2000)

def run(chance, criterion=SelectionMode.FINE, seeds=(0, 1, 2), epochs=30):
    ndcgs, maps = [], []
    for seed in seeds:
        t0 = time.time()
        cfg = TrainConfig(
            epochs=epochs, batch_size=64, embed_dim=32, text_dim=64, seed=seed,
            augment=AugmentConfig(chance=chance, criterion=criterion, target=AugmentTarget.JOINT),
        )
        result = train(train_c, cfg)
        report = full_report(text_video_scores(result.encoder, result.featurizer, test_c), test_c.annotations)
        ndcgs.append(report["t-v"]["nDCG"])
        maps.append(report["t-v"]["mAP"])
        print(f"  chance={chance} {criterion.value} seed={seed}: nDCG={report['t-v']['nDCG']:.4f} "
              f"mAP={report['t-v']['mAP']:.4f} Rsum={report['Rsum']:.1f} loss={result.log[-1]['loss']:.4f} "
              f"({time.time()-t0:.1f}s)")
    print(f"chance={chance} {criterion.value}: mean nDCG={np.mean(ndcgs):.4f} mean mAP={np.mean(maps):.4f}")
    return np.mean(ndcgs), np.mean(maps)

print("== chi=0 baseline ==")
n0, m0 = run(0.0)
print("== chi=0.25 joint fine ==")
n25, m25 = run(0.25)
print("== chi=1.0 joint fine ==")
n100, m100 = run(1.0)
print("== chi=1.0 joint coarse ==")
nc, mc = run(1.0, criterion=SelectionMode.COARSE)

print()
print(f"delta nDCG (chi=1 - chi=0): {100*(n100-n0):+.2f} points (need >= +1.0)")
print(f"nDCG chi=1 > chi=0.25: {n100 > n25} ({100*(n100-n25):+.2f})")
print(f"fine mAP {m100:.4f} vs coarse mAP {mc:.4f}: fine >= coarse: {m100 >= mc}")
print(f"informational nDCG fine {n100:.4f} vs coarse {nc:.4f}")
