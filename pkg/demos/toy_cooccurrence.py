"""The co-occurrence intuition behind bag-level novelty detection.

Four hand-built bags over two known labels contain four instance types.
Counting how often a type's presence agrees with a label's presence
already separates the types: the diamond never earns a matching label,
so its best agreement rate stays low - it behaves like a novel class.
"""

from miml_novelty import co_occurrence, toy_dataset

ds = toy_dataset()
types = ("triangle", "triangle_down", "square", "diamond")

print("bags:")
for bag in ds.bags:
    labels = ",".join(sorted(bag.labels)) or "(none)"
    print(f"  bag {bag.bag_id}: types {', '.join(bag.true_classes):42s} labels {{{labels}}}")

print("\nagreement rate of each (type, label) pair:")
print(f"{'':>15s}" + "".join(f"{t:>15s}" for t in types))
for label in ds.known_labels:
    row = [co_occurrence(ds, t, label) for t in types]
    print(f"{label:>15s}" + "".join(f"{v:>15.2f}" for v in row))

threshold = 0.75
print(f"\nmax rate per type vs threshold {threshold}:")
for t in types:
    best = max(co_occurrence(ds, t, label) for label in ds.known_labels)
    verdict = "known" if best >= threshold else "novel"
    print(f"  {t:15s} max rate {best:.2f} -> {verdict}")
