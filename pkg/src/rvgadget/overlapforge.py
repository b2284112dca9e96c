"""Synthesis of carrier sequences that conceal a hidden instruction stream.

A carrier sequence is a chain of ordinary-looking 4-byte instructions whose
2-byte-offset shadow decodes to a requested hidden stream: hidden
instruction j shares its low halfword with carrier j's high halfword and
its high halfword with carrier j+1's low halfword.  Upper-immediate loads
make ideal carriers because their high halfword is nothing but immediate
bits, leaving the hidden low halfword completely free; the constraint that
remains ties the hidden high halfword to the next carrier's opcode bits,
destination register, and low immediate nibble.  The hidden stream ends
with a short escape jump whose halfword sits entirely inside the last
carrier, which is therefore exactly the carrier whose upper half is a
valid 16-bit instruction.

Solutions are found by plain enumeration in a fixed order (carrier
mnemonics as listed in the policy, then register index ascending, then
immediate bits ascending), so identical inputs always give identical
plans.  Each carrier gets a distinct destination register so the plan can
be surfaced as one C call whose magic constant arguments force a compiler
to materialise the carriers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from is_standin import nothing  # placeholder removed below
