"""Process descriptors shared by samplers, densities, equations and identities."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError

TAGS = (
    "FBm", "IteratedFBm", "IteratedFBmChain", "WeightedJ", "ScaledIterated",
    "ProductFBm", "Cauchy", "CauchyOfFBm", "BmOfCauchy", "CauchyOfCauchy",
    "HalfProductCauchy", "ReciprocalCC",
)

# flag-grammar names -> tags
CLI_NAMES = {
    "fbm": "FBm",
    "itfbm": "IteratedFBm",
    "chain": "IteratedFBmChain",
    "j": "WeightedJ",
    "j1": "WeightedJ",
    "j2": "WeightedJ",
    "scaled": "ScaledIterated",
    "prodfbm": "ProductFBm",
    "cauchy": "Cauchy",
    "cbm": "CauchyOfFBm",
    "bc": "BmOfCauchy",
    "cc": "CauchyOfCauchy",
    "halfprod": "HalfProductCauchy",
    "recipcc": "ReciprocalCC",
}


def check_hurst(h) -> float:
    h = float(h)
    if not 0.0 < h <= 1.0:
        raise DomainError(f"Hurst exponent {h} outside (0, 1]")
    return h


@dataclass(frozen=True)
class ProcessModel:
    """One of the compositions, with its parameters.

    ``hursts`` is ordered outermost first: for B1_{H1}(|B2_{H2}(t)|) it is
    (H1, H2).  Single-Hurst tags store one value.
    """

    tag: str
    hursts: tuple = ()
    K: float = 0.0
    n: int = 1
    weights_outer: tuple = field(default=(), compare=True)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise DomainError(f"unknown process tag {self.tag!r}")
        object.__setattr__(self, "hursts", tuple(check_hurst(h) for h in self.hursts))
        if self.K < 0:
            raise DomainError("K must be >= 0")
        if self.n < 1:
            raise DomainError("n must be >= 1")
        need = {
            "FBm": 1, "IteratedFBm": 2, "WeightedJ": 1, "ScaledIterated": 1,
            "ProductFBm": 1, "CauchyOfFBm": 1,
        }
        if self.tag in need and len(self.hursts) != need[self.tag]:
            raise DomainError(f"{self.tag} takes {need[self.tag]} Hurst value(s)")
        if self.tag == "IteratedFBmChain" and len(self.hursts) < 2:
            raise DomainError("iterated chains need at least two Hurst values")
        if self.tag in ("Cauchy", "BmOfCauchy", "CauchyOfCauchy", "HalfProductCauchy",
                        "ReciprocalCC") and self.hursts:
            raise DomainError(f"{self.tag} takes no Hurst parameter")
        if self.weights_outer and self.tag != "WeightedJ":
            raise DomainError("outer Hurst weights only apply to WeightedJ")
        if self.weights_outer:
            if len(self.weights_outer) != self.n:
                raise DomainError("WeightedJ(n) needs n outer Hurst weights")
            object.__setattr__(self, "weights_outer",
                               tuple(check_hurst(h) for h in self.weights_outer))

    @property
    def H(self) -> float:
        return self.hursts[-1]

    def self_similarity(self) -> float:
        """Exponent a with X(t) =d t^a X(1)."""
        tag = self.tag
        if tag == "FBm":
            return self.hursts[0]
        if tag in ("IteratedFBm", "IteratedFBmChain"):
            prod = 1.0
            for h in self.hursts:
                prod *= h
            return prod
        if tag in ("WeightedJ", "ProductFBm", "CauchyOfFBm"):
            return self.H
        if tag == "ScaledIterated":
            return self.K + 0.5 * self.H
        if tag == "BmOfCauchy":
            return 0.5
        return 1.0  # Cauchy family

    def params(self) -> dict:
        out = {"tag": self.tag}
        if self.hursts:
            out["hursts"] = list(self.hursts)
        if self.tag == "ScaledIterated":
            out["K"] = self.K
        if self.tag in ("WeightedJ", "ProductFBm"):
            out["n"] = self.n
        if self.weights_outer:
            out["weights_outer"] = list(self.weights_outer)
        return out


# convenience constructors

def FBm(H):
    return ProcessModel("FBm", (H,))


def IteratedFBm(H1, H2):
    return ProcessModel("IteratedFBm", (H1, H2))


def IteratedFBmChain(*hursts):
    return ProcessModel("IteratedFBmChain", tuple(hursts))


def WeightedJ(n, H, outer=()):
    return ProcessModel("WeightedJ", (H,), n=n, weights_outer=tuple(outer))


def ScaledIterated(K, H):
    return ProcessModel("ScaledIterated", (H,), K=K)


def ProductFBm(n, H):
    return ProcessModel("ProductFBm", (H,), n=n)


def Cauchy():
    return ProcessModel("Cauchy")


def CauchyOfFBm(H):
    return ProcessModel("CauchyOfFBm", (H,))


def BmOfCauchy():
    return ProcessModel("BmOfCauchy")


def CauchyOfCauchy():
    return ProcessModel("CauchyOfCauchy")


def HalfProductCauchy():
    return ProcessModel("HalfProductCauchy")


def ReciprocalCC():
    return ProcessModel("ReciprocalCC")


def parse_model(text: str) -> ProcessModel:
    """Parse ``name[:key=val[,key=val]*]``.

    Keys: ``H`` (single Hurst), ``H1``/``H2`` (itfbm), ``H`` as a
    ``/``-separated list for chains, ``n``, ``K``.
    """
    name, _, rest = text.strip().partition(":")
    if name not in CLI_NAMES:
        raise DomainError(f"unknown model name {name!r}; choose from {sorted(CLI_NAMES)}")
    tag = CLI_NAMES[name]
    kv = {}
    if rest:
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise DomainError(f"malformed model parameter {item!r}")
            kv[key.strip()] = val.strip()
    try:
        if tag == "IteratedFBm":
            return IteratedFBm(float(kv.pop("H1", 0.5)), float(kv.pop("H2", 0.5)))
        if tag == "IteratedFBmChain":
            hs = [float(v) for v in kv.pop("H", "0.5/0.5").split("/")]
            return IteratedFBmChain(*hs)
        if tag in ("FBm", "CauchyOfFBm"):
            return ProcessModel(tag, (float(kv.pop("H", 0.5)),))
        if tag in ("WeightedJ", "ProductFBm"):
            default_n = 1 if tag == "WeightedJ" else 2
            if name in ("j1", "j2"):
                if "n" in kv:
                    raise DomainError(f"{name} fixes n; drop the n parameter")
                default_n = int(name[1])
            return ProcessModel(tag, (float(kv.pop("H", 0.5)),), n=int(kv.pop("n", default_n)))
        if tag == "ScaledIterated":
            return ScaledIterated(float(kv.pop("K", 0.0)), float(kv.pop("H", 0.5)))
        return ProcessModel(tag)
    finally:
        if kv:
            raise DomainError(f"unused model parameters {sorted(kv)}")
