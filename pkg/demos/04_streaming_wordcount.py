# ===========================================================================
# Streaming word count: partial answers while the shuffle runs
# ===========================================================================
# Each round folds P more map outputs into the reducers' state. The driver
# sees a partial aggregate per round and can measure how far it is from the
# final answer with KL divergence.

import numpy as np

from futureshuffle import start_cluster
from futureshuffle.shuffle import CountJob, ShuffleConfig, kl_divergence, normalize, streaming_shuffle

rng = np.random.default_rng(4)
vocab = [f"w{i:03d}" for i in range(300)]
weights = rng.dirichlet(np.full(len(vocab), 0.2))
docs = [[vocab[k] for k in rng.choice(len(vocab), 1500, p=weights)] for _ in range(40)]

with start_cluster(4, 2) as c:
    rt = c.runtime
    inputs = [rt.put(d) for d in docs]
    stream = streaming_shuffle(rt, CountJob(8), inputs, ShuffleConfig(M=40, R=8, P=8))
    partials = list(stream)

final = normalize(partials[-1].value)
for p in partials:
    counts = {w: p.value.get(w, 0) for w in final}
    # smooth unseen words so the divergence stays finite
    seen = normalize({w: v + 1e-9 for w, v in counts.items()})
    print(f"round {p.round}: t={p.timestamp:.4f}s  words={sum(p.value.values()):6d}  "
          f"KL(final || partial)={kl_divergence(final, seen):.5f}")
print("job complete at", round(stream.completed_at, 4), "s")
