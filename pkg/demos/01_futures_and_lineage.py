# ===========================================================================
# Distributed futures on a simulated cluster
# ===========================================================================
# Tasks return refs right away. Refs can be passed into other tasks before
# the values exist, and a lost value is rebuilt by replaying its producer.

from futureshuffle import start_cluster

cluster = start_cluster(nodes=3, slots_per_node=2)
rt = cluster.runtime


def square(x):
    return x * x


def total(*xs):
    return sum(xs)


rt.register("square", square)
rt.register("total", total)

# fan out, then fan in; nothing blocks until get()
squares = [rt.call("square", i, placement=i % 3) for i in range(10)]
answer = rt.call("total", *squares)
print("sum of squares:", rt.get(answer), "at t =", round(rt.now, 6), "s (simulated)")

# wait() hands back whatever finished first
ready, pending = rt.wait(squares, num_ready=4)
print("first four ready:", [rt.get(r) for r in ready], "/ still pending:", len(pending))

# a chain that lives only on node 1
a = rt.call("square", 3, placement=1)
b = rt.call("square", a, placement=1)
rt.wait([b])
rt.drop_ref(a)
cluster.kill_node(1)
print("after losing node 1, b is", rt.object_state(b))
print("b comes back anyway:", rt.get(b), "(replayed on node", sorted(rt.locations(b)), ")")
print("reconstructions:", rt.metrics()["reconstructions"])

# refs are counted; dropping the last one frees the object
rt.drop_refs(squares + [answer, b])
print("live objects:", sum(e.refcount > 0 for e in cluster.store.entries.values()))
cluster.shutdown()
