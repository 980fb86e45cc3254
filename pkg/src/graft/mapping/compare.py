from dataclasses import dataclass, field


@dataclass
class MapComparison:
    """Outcome of comparing two interaction maps.

    ``differences`` maps a feature to ``(only_in_a, only_in_b)``, each a sorted
    list of ``(param, flat index)`` coordinates.
    """

    equal: bool
    differences: dict = field(default_factory=dict)
    only_features_a: list = field(default_factory=list)
    only_features_b: list = field(default_factory=list)

    def __bool__(self):
        return self.equal

    def lines(self):
        out = []
        if self.only_features_a:
            out.append(f"features only in first map: {', '.join(self.only_features_a)}")
        if self.only_features_b:
            out.append(f"features only in second map: {', '.join(self.only_features_b)}")
        for feature, (left, right) in sorted(self.differences.items()):
            for param, index in left:
                out.append(f"{feature}: {param}[{index}] only in first map")
            for param, index in right:
                out.append(f"{feature}: {param}[{index}] only in second map")
        return out


def maps_equal(a, b):
    """Compare two maps feature by feature; universe mismatches are reported."""
    only_a = [f for f in a.features if f not in set(b.features)]
    only_b = [f for f in b.features if f not in set(a.features)]
    differences = {}
    for feature in a.features:
        if feature in only_a:
            continue
        left = {(p, int(i)) for p, idx in a[feature].items() for i in idx}
        right = {(p, int(i)) for p, idx in b[feature].items() for i in idx}
        if left != right:
            differences[feature] = (sorted(left - right), sorted(right - left))
    equal = not (only_a or only_b or differences) and a.features == b.features
    return MapComparison(equal, differences, only_a, only_b)
