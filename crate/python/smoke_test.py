"""End-to-end check of the Python bindings.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import json
import random

import fuzzylink_py as fl


def main():
    code = fl.Code("bch:31:5")
    assert (code.n, code.k, code.d, code.t) == (31, 11, 11, 5), code

    rng = random.Random(1)
    msg = [rng.randrange(2) for _ in range(code.k)]
    c = code.encode(msg)
    assert code.is_codeword(c)
    noisy = list(c)
    for i in rng.sample(range(code.n), code.t):
        noisy[i] ^= 1
    assert code.decode(noisy) == c

    w = [rng.randrange(2) for _ in range(code.n)]
    rec1 = fl.enroll(code, w, seed=10, hash=True)
    near = list(w)
    near[3] ^= 1
    rec2 = fl.enroll(code, near, seed=11, hash=True)
    assert rec1.verify(near)
    assert fl.Record.from_json(rec1.to_json()).to_json() == rec1.to_json()

    out = fl.attack_pair(rec1, rec2, 1, use_hash=True)
    assert out["related"] and out["hash_verified"], out
    assert out["w1"] == w and out["w2"] == near

    other = fl.enroll(code, [rng.randrange(2) for _ in range(code.n)], seed=12)
    assert not fl.attack_pair(rec1, other, 0)["related"]

    assert fl.sphere_packing_density(2, 7, 4, 3)[0] == "1/1"
    assert fl.union_bound(2, 63, 47, 2)[0] == "2017/65536"
    assert fl.linear_map_probability(5)[0] == "1/6"
    assert fl.verify_theorem(2) == (8, True)

    a = fl.run_table1("bch:31:5", [1], 50, seed=3, threads=1)
    b = fl.run_table1("bch:31:5", [1], 50, seed=3, threads=2)
    assert a == b
    cells = json.loads(a)["cells"]
    assert cells[0]["mode"] == "related" and cells[0]["linkage_rate"] == 1.0

    try:
        fl.Code("bch:31")
    except ValueError:
        pass
    else:
        raise AssertionError("bad descriptor accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
