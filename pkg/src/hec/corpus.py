"""Built-in verification corpus.

Handwritten pairs reproduce the motivating kernels (a NAND map over 101
elements and its hoisted / De Morgan / tiled / unrolled variants), the
nested-unrolling example (factors 2 then 3 applied to a single loop), and
the two compiler-bug pairs: a loop-boundary check error after unrolling
(spurious remainder iteration for small symbol values) and a read-after-write
violation introduced by loop fusion. Generated pairs add PolyBench-style
gemm/atax/mvt kernels under unroll factors 2..16 and tile factors 2..16.

Variant texts are produced directly from templates, independent of the
checker's own term machinery, so they can serve as test oracles.
"""

from __future__ import annotations

import os

# --- motivating set (i1 NAND kernel) -----------------------------------------

_NAND_HEADER = ("func.func @kernel(%arg0: memref<101xi1>, %arg1: memref<101xi1>, "
                "%arg2: memref<101xi1>) {")


def _nand_body(iv, indent="    "):
    return "\n".join([
        f"{indent}%0 = affine.load %arg0[{iv}]",
        f"{indent}%1 = affine.load %arg1[{iv}]",
        f"{indent}%2 = arith.andi %0, %1 : i1",
        f"{indent}%3 = arith.xori %2, %true : i1",
        f"{indent}affine.store %3, %arg2[{iv}]",
    ])


def listing_baseline():
    return f"""{_NAND_HEADER}
  %true = arith.constant true
  affine.for %arg3 = 0 to 101 {{
{_nand_body('%arg3')}
  }}
  return
}}
"""


def listing_hoisted():
    # the constant moved inside the loop body: same dataflow graph
    return f"""{_NAND_HEADER}
  affine.for %arg3 = 0 to 101 {{
    %true = arith.constant true
{_nand_body('%arg3')}
  }}
  return
}}
"""


def listing_demorgan():
    return f"""{_NAND_HEADER}
  %true = arith.constant true
  affine.for %arg3 = 0 to 101 {{
    %0 = affine.load %arg0[%arg3]
    %1 = affine.load %arg1[%arg3]
    %2 = arith.xori %0, %true : i1
    %3 = arith.xori %1, %true : i1
    %4 = arith.ori %2, %3 : i1
    affine.store %4, %arg2[%arg3]
  }}
  return
}}
"""


def listing_tiled(factor=3):
    return f"""{_NAND_HEADER}
  %true = arith.constant true
  affine.for %arg3 = 0 to 101 step {factor} {{
    affine.for %arg4 = %arg3 to min(%arg3 + {factor}, 101) {{
{_nand_body('%arg4', '      ')}
    }}
  }}
  return
}}
"""


def listing_unrolled():
    # unroll factor 2: main loop 0..100 step 2 plus a remainder iteration
    return f"""#map = affine_map<(d0) -> (d0 + 1)>
{_NAND_HEADER}
  %true = arith.constant true
  affine.for %arg3 = 0 to 100 step 2 {{
{_nand_body('%arg3')}
    %4 = affine.apply #map(%arg3)
    %5 = affine.load %arg0[%4]
    %6 = affine.load %arg1[%4]
    %7 = arith.andi %5, %6 : i1
    %8 = arith.xori %7, %true : i1
    affine.store %8, %arg2[%4]
  }}
  affine.for %arg3 = 100 to 101 {{
{_nand_body('%arg3')}
  }}
  return
}}
"""


# --- nested unrolling (factors 2 then 3 on one loop) -------------------------


def _incr_body(idx, indent="    "):
    return "\n".join([
        f"{indent}%0 = affine.load %arg0[{idx}]",
        f"{indent}%1 = arith.addi %0, %c1 : i8",
        f"{indent}affine.store %1, %arg0[{idx}]",
    ])


def nested_unroll_original():
    return """func.func @kernel(%arg0: memref<64xi8>, %arg1: index) {
  %c1 = arith.constant 1 : i8
  affine.for %arg2 = 0 to %arg1 {
    %0 = affine.load %arg0[%arg2]
    %1 = arith.addi %0, %c1 : i8
    affine.store %1, %arg0[%arg2]
  }
  return
}
"""


def nested_unroll_transformed():
    def replicas(n, indent="    "):
        parts = [_incr_body("%arg2", indent)]
        for j in range(1, n):
            parts.append(_incr_body(f"%arg2 + {j}", indent))
        return "\n".join(parts)

    return f"""#map1 = affine_map<()[s0] -> (((s0 floordiv 2) floordiv 3) * 6)>
#map2 = affine_map<()[s0] -> ((s0 floordiv 2) * 2)>
#map3 = affine_map<()[s0] -> ((s0 floordiv 2) * 2 + ((s0 mod 2) floordiv 3) * 3)>
func.func @kernel(%arg0: memref<64xi8>, %arg1: index) {{
  %c1 = arith.constant 1 : i8
  affine.for %arg2 = 0 to #map1()[%arg1] step 6 {{
{replicas(6)}
  }}
  affine.for %arg2 = #map1()[%arg1] to #map2()[%arg1] step 2 {{
{replicas(2)}
  }}
  affine.for %arg2 = #map2()[%arg1] to #map3()[%arg1] step 3 {{
{replicas(3)}
  }}
  affine.for %arg2 = #map3()[%arg1] to %arg1 {{
{replicas(1)}
  }}
  return
}}
"""


# --- bug pair 1: loop boundary check error after unroll-by-2 -----------------
# The original loop runs from s0+10 to 2*s0 (empty whenever s0 <= 10). The
# unrolled version's remainder loop runs once for every odd s0 below 10.


def boundary_original():
    return """#map = affine_map<(d0) -> (d0 + 10)>
#map1 = affine_map<(d0) -> (d0 * 2)>
func.func @kernel(%arg0: memref<8xi32>, %arg1: index) {
  %c1 = arith.constant 1 : i32
  affine.for %arg2 = #map(%arg1) to #map1(%arg1) {
    %0 = affine.load %arg0[0]
    %1 = arith.addi %0, %c1 : i32
    affine.store %1, %arg0[0]
  }
  return
}
"""


def boundary_unrolled():
    return """#map = affine_map<(d0) -> (d0 + 10)>
#map1 = affine_map<()[s0] -> (s0 + (s0 floordiv 2) * 2)>
#map2 = affine_map<(d0) -> (d0 * 2)>
func.func @kernel(%arg0: memref<8xi32>, %arg1: index) {
  %c1 = arith.constant 1 : i32
  affine.for %arg2 = #map(%arg1) to #map1()[%arg1] step 2 {
    %0 = affine.load %arg0[0]
    %1 = arith.addi %0, %c1 : i32
    affine.store %1, %arg0[0]
    %2 = affine.load %arg0[0]
    %3 = arith.addi %2, %c1 : i32
    affine.store %3, %arg0[0]
  }
  affine.for %arg2 = #map1()[%arg1] to #map2(%arg1) {
    %0 = affine.load %arg0[0]
    %1 = arith.addi %0, %c1 : i32
    affine.store %1, %arg0[0]
  }
  return
}
"""


# --- bug pair 2: memory RAW violation under loop fusion ----------------------
# Unfused: a[1..10] end up a[0]+1. Fused: a[k] ends up a[0]+k.


def fusion_original():
    return """func.func @testing2(%arg0: memref<11xi32>) {
  %c1 = arith.constant 1 : i32
  affine.for %arg1 = 0 to 10 {
    %0 = affine.load %arg0[%arg1]
    affine.store %0, %arg0[%arg1 + 1]
  }
  affine.for %arg1 = 0 to 10 {
    %0 = affine.load %arg0[%arg1 + 1]
    %1 = arith.addi %0, %c1 : i32
    affine.store %1, %arg0[%arg1 + 1]
  }
  return
}
"""


def fusion_fused():
    return """func.func @testing2(%arg0: memref<11xi32>) {
  %c1 = arith.constant 1 : i32
  affine.for %arg1 = 0 to 10 {
    %0 = affine.load %arg0[%arg1]
    affine.store %0, %arg0[%arg1 + 1]
    %1 = affine.load %arg0[%arg1 + 1]
    %2 = arith.addi %1, %c1 : i32
    affine.store %2, %arg0[%arg1 + 1]
  }
  return
}
"""


# --- generated kernels --------------------------------------------------------


GEMM_DIMS = (6, 5, 16)  # M, N, K


def _gemm_k_body(k_expr, indent="        "):
    m, n, K = GEMM_DIMS
    return "\n".join([
        f"{indent}%0 = affine.load %arg0[%i, {k_expr}]",
        f"{indent}%1 = affine.load %arg1[{k_expr}, %j]",
        f"{indent}%2 = arith.muli %0, %1 : i8",
        f"{indent}%3 = affine.load %arg2[%i, %j]",
        f"{indent}%4 = arith.addi %3, %2 : i8",
        f"{indent}affine.store %4, %arg2[%i, %j]",
    ])


def _gemm_header():
    m, n, k = GEMM_DIMS
    return (f"func.func @gemm(%arg0: memref<{m}x{k}xi8>, %arg1: memref<{k}x{n}xi8>, "
            f"%arg2: memref<{m}x{n}xi8>) {{")


def gemm():
    m, n, k = GEMM_DIMS
    return f"""{_gemm_header()}
  affine.for %i = 0 to {m} {{
    affine.for %j = 0 to {n} {{
      affine.for %k = 0 to {k} {{
{_gemm_k_body('%k')}
      }}
    }}
  }}
  return
}}
"""


def _unrolled_loop(iv, lo, hi, factor, body_at, indent):
    """Textual unroll with a remainder loop when the factor does not divide."""
    main_hi = lo + ((hi - lo) // factor) * factor
    rep = "\n".join(body_at(iv if j == 0 else f"{iv} + {j}") for j in range(factor))
    text = f"{indent}affine.for {iv} = {lo} to {main_hi} step {factor} {{\n{rep}\n{indent}}}"
    if main_hi != hi:
        text += (f"\n{indent}affine.for {iv} = {main_hi} to {hi} {{\n"
                 f"{body_at(iv)}\n{indent}}}")
    return text


def gemm_unrolled(factor):
    m, n, k = GEMM_DIMS
    inner = _unrolled_loop("%k", 0, k, factor, lambda e: _gemm_k_body(e), "      ")
    return f"""{_gemm_header()}
  affine.for %i = 0 to {m} {{
    affine.for %j = 0 to {n} {{
{inner}
    }}
  }}
  return
}}
"""


def gemm_tiled(factor):
    m, n, k = GEMM_DIMS
    return f"""{_gemm_header()}
  affine.for %i = 0 to {m} {{
    affine.for %j = 0 to {n} {{
      affine.for %k0 = 0 to {k} step {factor} {{
        affine.for %k = %k0 to min(%k0 + {factor}, {k}) {{
{_gemm_k_body('%k', '          ')}
        }}
      }}
    }}
  }}
  return
}}
"""


ATAX_DIMS = (6, 8)  # M, N


def _atax_header():
    m, n = ATAX_DIMS
    return (f"func.func @atax(%arg0: memref<{m}x{n}xi8>, %arg1: memref<{n}xi8>, "
            f"%arg2: memref<{m}xi8>, %arg3: memref<{n}xi8>) {{")


def _atax_body1(j_expr, indent="      "):
    return "\n".join([
        f"{indent}%0 = affine.load %arg0[%i, {j_expr}]",
        f"{indent}%1 = affine.load %arg1[{j_expr}]",
        f"{indent}%2 = arith.muli %0, %1 : i8",
        f"{indent}%3 = affine.load %arg2[%i]",
        f"{indent}%4 = arith.addi %3, %2 : i8",
        f"{indent}affine.store %4, %arg2[%i]",
    ])


def _atax_body2(j_expr, indent="      "):
    return "\n".join([
        f"{indent}%0 = affine.load %arg0[%i, {j_expr}]",
        f"{indent}%1 = affine.load %arg2[%i]",
        f"{indent}%2 = arith.muli %0, %1 : i8",
        f"{indent}%3 = affine.load %arg3[{j_expr}]",
        f"{indent}%4 = arith.addi %3, %2 : i8",
        f"{indent}affine.store %4, %arg3[{j_expr}]",
    ])


def atax(j_factor=1, tile=None):
    m, n = ATAX_DIMS
    blocks = []
    for body in (_atax_body1, _atax_body2):
        if tile:
            inner = (f"    affine.for %j0 = 0 to {n} step {tile} {{\n"
                     f"      affine.for %j = %j0 to min(%j0 + {tile}, {n}) {{\n"
                     f"{body('%j', '        ')}\n      }}\n    }}")
        elif j_factor > 1:
            inner = _unrolled_loop("%j", 0, n, j_factor, lambda e: body(e), "    ")
        else:
            inner = (f"    affine.for %j = 0 to {n} {{\n{body('%j')}\n    }}")
        blocks.append(f"  affine.for %i = 0 to {m} {{\n{inner}\n  }}")
    return _atax_header() + "\n" + "\n".join(blocks) + "\n  return\n}\n"


MVT_N = 8


def _mvt_body1(indent="      "):
    return "\n".join([
        f"{indent}%0 = affine.load %arg0[%i, %j]",
        f"{indent}%1 = affine.load %arg3[%j]",
        f"{indent}%2 = arith.muli %0, %1 : i8",
        f"{indent}%3 = affine.load %arg1[%i]",
        f"{indent}%4 = arith.addi %3, %2 : i8",
        f"{indent}affine.store %4, %arg1[%i]",
    ])


def _mvt_body2(indent="      "):
    return "\n".join([
        f"{indent}%0 = affine.load %arg0[%j, %i]",
        f"{indent}%1 = affine.load %arg4[%j]",
        f"{indent}%2 = arith.muli %0, %1 : i8",
        f"{indent}%3 = affine.load %arg2[%i]",
        f"{indent}%4 = arith.addi %3, %2 : i8",
        f"{indent}affine.store %4, %arg2[%i]",
    ])


def _mvt_header():
    n = MVT_N
    return (f"func.func @mvt(%arg0: memref<{n}x{n}xi8>, %arg1: memref<{n}xi8>, "
            f"%arg2: memref<{n}xi8>, %arg3: memref<{n}xi8>, %arg4: memref<{n}xi8>) {{")


def mvt(fused=False, j_factor=1):
    n = MVT_N
    if fused:
        inner = (f"    affine.for %j = 0 to {n} {{\n{_mvt_body1()}\n{_mvt_body2()}\n    }}")
    elif j_factor > 1:
        rep1 = _unrolled_loop("%j", 0, n, j_factor,
                              lambda e: _mvt_body1().replace("%j", e), "    ")
        inner = rep1 + f"\n    affine.for %j = 0 to {n} {{\n{_mvt_body2()}\n    }}"
    else:
        inner = (f"    affine.for %j = 0 to {n} {{\n{_mvt_body1()}\n    }}\n"
                 f"    affine.for %j = 0 to {n} {{\n{_mvt_body2()}\n    }}")
    return f"""{_mvt_header()}
  affine.for %i = 0 to {n} {{
{inner}
  }}
  return
}}
"""


def chain_unfused():
    return """func.func @chain(%arg0: memref<16xi8>, %arg1: memref<16xi8>, %arg2: memref<16xi8>, %arg3: memref<16xi8>) {
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = arith.addi %0, %1 : i8
    affine.store %2, %arg2[%i]
  }
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg2[%i]
    %1 = arith.addi %0, %0 : i8
    affine.store %1, %arg3[%i]
  }
  return
}
"""


def chain_fused():
    return """func.func @chain(%arg0: memref<16xi8>, %arg1: memref<16xi8>, %arg2: memref<16xi8>, %arg3: memref<16xi8>) {
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = arith.addi %0, %1 : i8
    affine.store %2, %arg2[%i]
    %3 = affine.load %arg2[%i]
    %4 = arith.addi %3, %3 : i8
    affine.store %4, %arg3[%i]
  }
  return
}
"""


def coalesce_nest():
    return """func.func @copy2d(%arg0: memref<12xi8>, %arg1: memref<12xi8>) {
  affine.for %i = 0 to 4 {
    affine.for %j = 0 to 3 {
      %0 = affine.load %arg0[%i * 3 + %j]
      affine.store %0, %arg1[%i * 3 + %j]
    }
  }
  return
}
"""


def coalesce_flat():
    return """func.func @copy2d(%arg0: memref<12xi8>, %arg1: memref<12xi8>) {
  affine.for %x = 0 to 12 {
    %0 = affine.load %arg0[(%x floordiv 3) * 3 + (%x mod 3)]
    affine.store %0, %arg1[(%x floordiv 3) * 3 + (%x mod 3)]
  }
  return
}
"""


def _map_kernel(stmts, width=8, n=16):
    body = "\n".join(f"    {s}" for s in stmts)
    return f"""func.func @mapk(%arg0: memref<{n}xi{width}>, %arg1: memref<{n}xi{width}>) {{
  affine.for %i = 0 to {n} {{
{body}
  }}
  return
}}
"""


def shl_kernel():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>) {
  %c3 = arith.constant 3 : i8
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = arith.shli %0, %c3 : i8
    affine.store %1, %arg1[%i]
  }
  return
}
"""


def mul8_kernel():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>) {
  %c8 = arith.constant 8 : i8
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = arith.muli %0, %c8 : i8
    affine.store %1, %arg1[%i]
  }
  return
}
"""


def shl_shl_kernel():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>) {
  %c2 = arith.constant 2 : i8
  %c3 = arith.constant 3 : i8
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = arith.shli %0, %c2 : i8
    %2 = arith.shli %1, %c3 : i8
    affine.store %2, %arg1[%i]
  }
  return
}
"""


def shl5_kernel():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>) {
  %c5 = arith.constant 5 : i8
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = arith.shli %0, %c5 : i8
    affine.store %1, %arg1[%i]
  }
  return
}
"""


def xor_direct():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>, %arg2: memref<16xi8>) {
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = arith.xori %0, %1 : i8
    affine.store %2, %arg2[%i]
  }
  return
}
"""


def xor_expanded():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>, %arg2: memref<16xi8>) {
  %c255 = arith.constant 255 : i8
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = arith.xori %1, %c255 : i8
    %3 = arith.andi %0, %2 : i8
    %4 = arith.xori %0, %c255 : i8
    %5 = arith.andi %4, %1 : i8
    %6 = arith.ori %3, %5 : i8
    affine.store %6, %arg2[%i]
  }
  return
}
"""


def demorgan_i8_nand():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>, %arg2: memref<16xi8>) {
  %c255 = arith.constant 255 : i8
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = arith.andi %0, %1 : i8
    %3 = arith.xori %2, %c255 : i8
    affine.store %3, %arg2[%i]
  }
  return
}
"""


def demorgan_i8_ornot():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>, %arg2: memref<16xi8>) {
  %c255 = arith.constant 255 : i8
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = arith.xori %0, %c255 : i8
    %3 = arith.xori %1, %c255 : i8
    %4 = arith.ori %2, %3 : i8
    affine.store %4, %arg2[%i]
  }
  return
}
"""


def mul_assoc_a():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>, %arg2: memref<16xi8>, %arg3: memref<16xi8>) {
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = affine.load %arg2[%i]
    %3 = arith.muli %0, %1 : i8
    %4 = arith.muli %3, %2 : i8
    affine.store %4, %arg3[%i]
  }
  return
}
"""


def mul_assoc_b():
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>, %arg2: memref<16xi8>, %arg3: memref<16xi8>) {
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = affine.load %arg2[%i]
    %3 = arith.muli %2, %0 : i8
    %4 = arith.muli %1, %3 : i8
    affine.store %4, %arg3[%i]
  }
  return
}
"""


def add_assoc_a():
    return mul_assoc_a().replace("arith.muli", "arith.addi")


def add_assoc_b():
    # associativity of + is not in the shipped ruleset: expected Unknown
    return """func.func @mapk(%arg0: memref<16xi8>, %arg1: memref<16xi8>, %arg2: memref<16xi8>, %arg3: memref<16xi8>) {
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = affine.load %arg2[%i]
    %3 = arith.addi %1, %2 : i8
    %4 = arith.addi %0, %3 : i8
    affine.store %4, %arg3[%i]
  }
  return
}
"""


def and_kernel():
    return _map_kernel([
        "%0 = affine.load %arg0[%i]",
        "%1 = arith.andi %0, %0 : i8",
        "affine.store %1, %arg1[%i]",
    ])


def or_of_pair():
    return """func.func @mapk(%arg0: memref<16xi1>, %arg1: memref<16xi1>, %arg2: memref<16xi1>) {
  affine.for %i = 0 to 16 {
    %0 = affine.load %arg0[%i]
    %1 = affine.load %arg1[%i]
    %2 = arith.ori %0, %1 : i1
    affine.store %2, %arg2[%i]
  }
  return
}
"""


def and_of_pair():
    return or_of_pair().replace("arith.ori", "arith.andi")


def bounds_16():
    return """func.func @fills(%arg0: memref<17xi8>) {
  %c7 = arith.constant 7 : i8
  affine.for %i = 0 to 16 {
    affine.store %c7, %arg0[%i]
  }
  return
}
"""


def bounds_17():
    return bounds_16().replace("0 to 16", "0 to 17")


# --- the pair registry --------------------------------------------------------

EQUIVALENT, NOT_EQUIVALENT, UNKNOWN = "equivalent", "not_equivalent", "unknown"


def corpus_pairs():
    """(name, text_a, text_b, expected_verdict) for the full corpus."""
    pairs = [
        ("hoisting", listing_baseline(), listing_hoisted(), EQUIVALENT),
        ("demorgan_i1", listing_baseline(), listing_demorgan(), EQUIVALENT),
        ("tiling_f3", listing_baseline(), listing_tiled(3), EQUIVALENT),
        ("unroll_f2_tail", listing_baseline(), listing_unrolled(), EQUIVALENT),
        ("nested_unroll_2x3", nested_unroll_original(), nested_unroll_transformed(), EQUIVALENT),
        ("boundary_bug", boundary_original(), boundary_unrolled(), NOT_EQUIVALENT),
        ("fusion_raw_bug", fusion_original(), fusion_fused(), NOT_EQUIVALENT),
        ("mvt_fusion", mvt(fused=False), mvt(fused=True), EQUIVALENT),
        ("mvt_unroll2", mvt(), mvt(j_factor=2), EQUIVALENT),
        ("chain_fusion_same_index", chain_unfused(), chain_fused(), EQUIVALENT),
        ("coalescing_4x3", coalesce_nest(), coalesce_flat(), EQUIVALENT),
        ("shl_to_mul", shl_kernel(), mul8_kernel(), EQUIVALENT),
        ("shl_shl_merge", shl_shl_kernel(), shl5_kernel(), EQUIVALENT),
        ("xor_expansion", xor_direct(), xor_expanded(), EQUIVALENT),
        ("demorgan_i8", demorgan_i8_nand(), demorgan_i8_ornot(), EQUIVALENT),
        ("mul_assoc_comm", mul_assoc_a(), mul_assoc_b(), EQUIVALENT),
        ("add_assoc_missing_rule", add_assoc_a(), add_assoc_b(), UNKNOWN),
        ("and_vs_or", and_of_pair(), or_of_pair(), NOT_EQUIVALENT),
        ("off_by_one_bound", bounds_16(), bounds_17(), NOT_EQUIVALENT),
    ]
    for f in (2, 4, 8, 16):
        pairs.append((f"gemm_unroll{f}", gemm(), gemm_unrolled(f), EQUIVALENT))
    pairs.append(("gemm_unroll3_tail", gemm(), gemm_unrolled(3), EQUIVALENT))
    pairs.append(("gemm_unroll5_tail", gemm(), gemm_unrolled(5), EQUIVALENT))
    for f in (2, 4, 8, 16):
        pairs.append((f"gemm_tile{f}", gemm(), gemm_tiled(f), EQUIVALENT))
    for f in (2, 4, 8):
        pairs.append((f"atax_unroll{f}", atax(), atax(j_factor=f), EQUIVALENT))
    pairs.append(("atax_unroll3_tail", atax(), atax(j_factor=3), EQUIVALENT))
    for f in (4, 16):
        pairs.append((f"atax_tile{f}", atax(), atax(tile=f), EQUIVALENT))
    return pairs


def corpus_files():
    """Every distinct corpus program as (filename, text)."""
    seen = {}
    for name, a, b, _ in corpus_pairs():
        seen.setdefault(f"{name}.a.mlir", a)
        seen.setdefault(f"{name}.b.mlir", b)
    return sorted(seen.items())


def write_corpus(directory):
    os.makedirs(directory, exist_ok=True)
    for fname, text in corpus_files():
        with open(os.path.join(directory, fname), "w", encoding="utf-8") as fh:
            fh.write(text)
    return directory
