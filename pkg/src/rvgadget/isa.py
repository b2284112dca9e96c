"""RV64GC instruction decoding, encoding, and control-flow classification.

RV64I, M, and the full C extension are decoded field-exactly and re-encode
byte-for-byte.  A, F, and D are validated at opcode/funct granularity and
decoded with family mnemonics (``amo.w``, ``fadd.d``, ...); they are not part
of the encode subset.  Privileged SYSTEM encodings (mret, wfi, sfence.vma)
are treated as invalid: this toolkit targets user-level code.

Instruction length lives in the low bits of the first halfword: a 16-bit
instruction has bits [1:0] != 0b11, a 32-bit instruction has bits [1:0] ==
0b11 with bits [4:2] != 0b111.  Longer encodings (bits [4:0] == 0b11111) and
the all-zero halfword are invalid.  Everything is little-endian.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

__all__ = [
    "Flow",
    "Instr",
    "OverlapClass",
    "Reg",
    "FReg",
    "EncodeError",
    "instr_length",
    "decode",
    "encode",
    "overlap_class",
    "successors",
    "flow_of",
    "render",
    "reg_name",
    "freg_name",
    "reg_index",
]


class Flow(enum.Enum):
    """Static control-flow behaviour of one instruction."""

    FALLTHROUGH = "fallthrough"
    DIRECT_JUMP = "direct_jump"
    COND_BRANCH = "cond_branch"
    CALL = "call"
    INDIRECT_JUMP = "indirect_jump"
    INDIRECT_CALL = "indirect_call"
    SYSCALL = "syscall"
    HALTING = "halting"


class OverlapClass(enum.Enum):
    """How a 32-bit instruction can participate in a 2-byte-offset overlap."""

    I1_CANDIDATE = "i1_candidate"  # upper halfword starts another 32-bit instruction
    I2 = "i2"                      # upper halfword is itself a valid 16-bit instruction
    NONE = "none"


# ABI names per the standard psABI register convention.
_ABI_NAMES = (
    ["zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1"]
    + [f"a{i}" for i in range(8)]
    + [f"s{i}" for i in range(2, 12)]
    + [f"t{i}" for i in range(3, 7)]
)
_FABI_NAMES = (
    [f"ft{i}" for i in range(8)]
    + ["fs0", "fs1"]
    + [f"fa{i}" for i in range(8)]
    + [f"fs{i}" for i in range(2, 12)]
    + [f"ft{i}" for i in range(8, 12)]
)
_ABI_INDEX = {name: i for i, name in enumerate(_ABI_NAMES)}
_ABI_INDEX.update({f"x{i}": i for i in range(32)})
_FABI_INDEX = {name: i for i, name in enumerate(_FABI_NAMES)}
_FABI_INDEX.update({f"f{i}": i for i in range(32)})


def reg_name(index: int) -> str:
    return _ABI_NAMES[index]


def freg_name(index: int) -> str:
    return _FABI_NAMES[index]


def reg_index(name: str) -> int:
    """Map an ABI or xN register name to its index; raises KeyError."""
    return _ABI_INDEX[name]


@dataclass(frozen=True)
class Reg:
    """Integer register operand, by index 0-31."""

    index: int

    def __post_init__(self):
        if not 0 <= self.index < 32:
            raise ValueError(f"register index out of range: {self.index}")

    def __repr__(self):
        return f"Reg({_ABI_NAMES[self.index]})"


@dataclass(frozen=True)
class FReg:
    """Floating-point register operand, by index 0-31."""

    index: int

    def __post_init__(self):
        if not 0 <= self.index < 32:
            raise ValueError(f"register index out of range: {self.index}")

    def __repr__(self):
        return f"FReg({_FABI_NAMES[self.index]})"


@dataclass(frozen=True)
class Instr:
    """One decoded instruction at a concrete address."""

    address: int
    width: int
    mnemonic: str
    operands: tuple
    flow: Flow
    raw: bytes


class EncodeError(ValueError):
    """Unsupported mnemonic, wrong operand shape, or out-of-range field."""


def _sx(value: int, bits: int) -> int:
    """Sign-extend the low `bits` of value."""
    value &= (1 << bits) - 1
    if value & (1 << (bits - 1)):
        value -= 1 << bits
    return value


def instr_length(halfword: int):
    """Length in bytes (2 or 4) encoded by an instruction's first halfword.

    Returns None for invalid fetches: the all-zero halfword (defined
    illegal) and the >=48-bit prefixes (bits [4:0] == 0b11111).
    """
    hw = halfword & 0xFFFF
    if hw == 0:
        return None
    if hw & 0b11 != 0b11:
        return 2
    if hw & 0b11100 == 0b11100:
        return None
    return 4


# ---------------------------------------------------------------------------
# 32-bit decode
# ---------------------------------------------------------------------------

_LOAD_F3 = {0: "lb", 1: "lh", 2: "lw", 3: "ld", 4: "lbu", 5: "lhu", 6: "lwu"}
_STORE_F3 = {0: "sb", 1: "sh", 2: "sw", 3: "sd"}
_BRANCH_F3 = {0: "beq", 1: "bne", 4: "blt", 5: "bge", 6: "bltu", 7: "bgeu"}
_OPIMM_F3 = {0: "addi", 2: "slti", 3: "sltiu", 4: "xori", 6: "ori", 7: "andi"}
_CSR_F3 = {1: "csrrw", 2: "csrrs", 3: "csrrc", 5: "csrrwi", 6: "csrrsi", 7: "csrrci"}
_OP_FUNCT = {
    (0x00, 0): "add", (0x20, 0): "sub", (0x00, 1): "sll", (0x00, 2): "slt",
    (0x00, 3): "sltu", (0x00, 4): "xor", (0x00, 5): "srl", (0x20, 5): "sra",
    (0x00, 6): "or", (0x00, 7): "and",
    (0x01, 0): "mul", (0x01, 1): "mulh", (0x01, 2): "mulhsu", (0x01, 3): "mulhu",
    (0x01, 4): "div", (0x01, 5): "divu", (0x01, 6): "rem", (0x01, 7): "remu",
}
_OP32_FUNCT = {
    (0x00, 0): "addw", (0x20, 0): "subw", (0x00, 1): "sllw",
    (0x00, 5): "srlw", (0x20, 5): "sraw",
    (0x01, 0): "mulw", (0x01, 4): "divw", (0x01, 5): "divuw",
    (0x01, 6): "remw", (0x01, 7): "remuw",
}
# A extension, funct5 values with defined semantics.
_AMO_F5 = {0x00, 0x01, 0x02, 0x03, 0x04, 0x08, 0x0C, 0x10, 0x14, 0x18, 0x1C}
# F/D funct5 families (funct7 >> 2); True when funct3 is a rounding mode.
_FP_FAMILIES = {
    0x00: ("fadd", True), 0x01: ("fsub", True), 0x02: ("fmul", True),
    0x03: ("fdiv", True), 0x0B: ("fsqrt", True), 0x04: ("fsgnj", False),
    0x05: ("fminmax", False), 0x14: ("fcmp", False), 0x18: ("fcvt", True),
    0x1A: ("fcvt", True), 0x08: ("fcvt", True), 0x1C: ("fmv", False),
    0x1E: ("fmv", False),
}
_RM_VALID = {0, 1, 2, 3, 4, 7}


def _decode_word(word: int, address: int, raw: bytes):
    opcode = word & 0x7F
    rd = (word >> 7) & 0x1F
    f3 = (word >> 12) & 0x7
    rs1 = (word >> 15) & 0x1F
    rs2 = (word >> 20) & 0x1F
    f7 = (word >> 25) & 0x7F

    def make(mnemonic, operands):
        return Instr(address, 4, mnemonic, tuple(operands),
                     flow_of(mnemonic, tuple(operands)), raw)

    if opcode == 0x37:  # lui
        return make("lui", (Reg(rd), (word >> 12) & 0xFFFFF))
    if opcode == 0x17:  # auipc
        return make("auipc", (Reg(rd), (word >> 12) & 0xFFFFF))
    if opcode == 0x6F:  # jal, imm[20|10:1|11|19:12]
        imm = _sx((((word >> 31) & 1) << 20) | (((word >> 12) & 0xFF) << 12)
                  | (((word >> 20) & 1) << 11) | (((word >> 21) & 0x3FF) << 1), 21)
        return make("jal", (Reg(rd), imm))
    if opcode == 0x67:
        if f3 != 0:
            return None
        return make("jalr", (Reg(rd), Reg(rs1), _sx(word >> 20, 12)))
    if opcode == 0x63:
        mn = _BRANCH_F3.get(f3)
        if mn is None:
            return None
        imm = _sx((((word >> 31) & 1) << 12) | (((word >> 7) & 1) << 11)
                  | (((word >> 25) & 0x3F) << 5) | (((word >> 8) & 0xF) << 1), 13)
        return make(mn, (Reg(rs1), Reg(rs2), imm))
    if opcode == 0x03:
        mn = _LOAD_F3.get(f3)
        if mn is None:
            return None
        return make(mn, (Reg(rd), Reg(rs1), _sx(word >> 20, 12)))
    if opcode == 0x23:
        mn = _STORE_F3.get(f3)
        if mn is None:
            return None
        imm = _sx(((word >> 25) << 5) | ((word >> 7) & 0x1F), 12)
        return make(mn, (Reg(rs2), Reg(rs1), imm))
    if opcode == 0x13:
        if f3 == 1:  # slli, shamt6 on RV64
            if (word >> 26) != 0:
                return None
            return make("slli", (Reg(rd), Reg(rs1), (word >> 20) & 0x3F))
        if f3 == 5:
            top6 = word >> 26
            if top6 == 0x00:
                return make("srli", (Reg(rd), Reg(rs1), (word >> 20) & 0x3F))
            if top6 == 0x10:
                return make("srai", (Reg(rd), Reg(rs1), (word >> 20) & 0x3F))
            return None
        return make(_OPIMM_F3[f3], (Reg(rd), Reg(rs1), _sx(word >> 20, 12)))
    if opcode == 0x1B:
        if f3 == 0:
            return make("addiw", (Reg(rd), Reg(rs1), _sx(word >> 20, 12)))
        shamt = (word >> 20) & 0x1F
        if f3 == 1 and f7 == 0x00:
            return make("slliw", (Reg(rd), Reg(rs1), shamt))
        if f3 == 5 and f7 == 0x00:
            return make("srliw", (Reg(rd), Reg(rs1), shamt))
        if f3 == 5 and f7 == 0x20:
            return make("sraiw", (Reg(rd), Reg(rs1), shamt))
        return None
    if opcode == 0x33:
        mn = _OP_FUNCT.get((f7, f3))
        if mn is None:
            return None
        return make(mn, (Reg(rd), Reg(rs1), Reg(rs2)))
    if opcode == 0x3B:
        mn = _OP32_FUNCT.get((f7, f3))
        if mn is None:
            return None
        return make(mn, (Reg(rd), Reg(rs1), Reg(rs2)))
    if opcode == 0x0F:  # fence / fence.i, kept coarse (no encode)
        if f3 == 0:
            return make("fence", ())
        if f3 == 1:
            return make("fence.i", ())
        return None
    if opcode == 0x73:
        if f3 == 0:
            imm = word >> 20
            if rd == 0 and rs1 == 0 and imm == 0:
                return make("ecall", ())
            if rd == 0 and rs1 == 0 and imm == 1:
                return make("ebreak", ())
            return None  # privileged encodings: out of user-level scope
        mn = _CSR_F3.get(f3)
        if mn is None:
            return None
        csr = (word >> 20) & 0xFFF
        if f3 >= 5:  # immediate variants carry uimm5 in the rs1 slot
            return make(mn, (Reg(rd), csr, rs1))
        return make(mn, (Reg(rd), csr, Reg(rs1)))

    # --- coarse extensions: valid/invalid plus flow class only ---
    if opcode == 0x2F:  # A extension
        if f3 not in (2, 3):
            return None
        f5 = f7 >> 2
        if f5 not in _AMO_F5:
            return None
        if f5 == 0x02 and rs2 != 0:  # lr requires rs2=0
            return None
        mn = "amo.w" if f3 == 2 else "amo.d"
        return make(mn, (Reg(rd), Reg(rs1), Reg(rs2)))
    if opcode == 0x07:  # flw/fld
        if f3 == 2:
            return make("flw", (FReg(rd), Reg(rs1), _sx(word >> 20, 12)))
        if f3 == 3:
            return make("fld", (FReg(rd), Reg(rs1), _sx(word >> 20, 12)))
        return None
    if opcode == 0x27:  # fsw/fsd
        if f3 not in (2, 3):
            return None
        imm = _sx(((word >> 25) << 5) | ((word >> 7) & 0x1F), 12)
        mn = "fsw" if f3 == 2 else "fsd"
        return make(mn, (FReg(rs2), Reg(rs1), imm))
    if opcode == 0x53:
        fmt = f7 & 0x3
        if fmt > 1:  # only S and D in RV64GC
            return None
        family = _FP_FAMILIES.get(f7 >> 2)
        if family is None:
            return None
        name, uses_rm = family
        suffix = ".s" if fmt == 0 else ".d"
        if uses_rm and f3 not in _RM_VALID:
            return None
        f5 = f7 >> 2
        if f5 == 0x0B and rs2 != 0:
            return None
        if f5 in (0x18, 0x1A) and rs2 > 3:  # int conversion selector
            return None
        if f5 == 0x08 and (rs2 > 1 or rs2 == fmt):  # fp-to-fp needs other fmt
            return None
        if f5 in (0x1C, 0x1E):
            if rs2 != 0 or f3 not in (0, 1):
                return None
            if f5 == 0x1E and f3 != 0:
                return None
        if f5 == 0x04 and f3 > 2:
            return None
        if f5 == 0x05 and f3 > 1:
            return None
        if f5 == 0x14 and f3 > 2:
            return None
        if f5 == 0x14:
            ops = (Reg(rd), FReg(rs1), FReg(rs2))
        elif f5 == 0x18:
            ops = (Reg(rd), FReg(rs1))
        elif f5 == 0x1A:
            ops = (FReg(rd), Reg(rs1))
        elif f5 == 0x1C:
            ops = (Reg(rd), FReg(rs1))
        elif f5 == 0x1E:
            ops = (FReg(rd), Reg(rs1))
        elif f5 in (0x0B, 0x08):
            ops = (FReg(rd), FReg(rs1))
        else:
            ops = (FReg(rd), FReg(rs1), FReg(rs2))
        return make(name + suffix, ops)
    if opcode in (0x43, 0x47, 0x4B, 0x4F):  # fused multiply-add family
        fmt = f7 & 0x3
        if fmt > 1 or f3 not in _RM_VALID:
            return None
        base = {0x43: "fmadd", 0x47: "fmsub", 0x4B: "fnmsub", 0x4F: "fnmadd"}[opcode]
        suffix = ".s" if fmt == 0 else ".d"
        rs3 = f7 >> 2
        return make(base + suffix, (FReg(rd), FReg(rs1), FReg(rs2), FReg(rs3)))
    return None


# ---------------------------------------------------------------------------
# 16-bit decode (RV64C)
# ---------------------------------------------------------------------------

def _creg(field: int) -> int:
    """3-bit compressed register field maps to x8-x15."""
    return field + 8


def _decode_compressed(hw: int, address: int, raw: bytes):
    op = hw & 0x3
    f3 = (hw >> 13) & 0x7

    def make(mnemonic, operands):
        return Instr(address, 2, mnemonic, tuple(operands),
                     flow_of(mnemonic, tuple(operands)), raw)

    if op == 0b00:
        rd_p = _creg((hw >> 2) & 0x7)
        rs1_p = _creg((hw >> 7) & 0x7)
        if f3 == 0b000:  # c.addi4spn, nzuimm[5:4|9:6|2|3]
            imm = ((((hw >> 11) & 0x3) << 4) | (((hw >> 7) & 0xF) << 6)
                   | (((hw >> 6) & 0x1) << 2) | (((hw >> 5) & 0x1) << 3))
            if imm == 0:
                return None
            return make("c.addi4spn", (Reg(rd_p), imm))
        if f3 == 0b001:  # c.fld, uimm[5:3|7:6]
            imm = (((hw >> 10) & 0x7) << 3) | (((hw >> 5) & 0x3) << 6)
            return make("c.fld", (FReg(rd_p), Reg(rs1_p), imm))
        if f3 == 0b010:  # c.lw, uimm[5:3|2|6]
            imm = ((((hw >> 10) & 0x7) << 3) | (((hw >> 6) & 0x1) << 2)
                   | (((hw >> 5) & 0x1) << 6))
            return make("c.lw", (Reg(rd_p), Reg(rs1_p), imm))
        if f3 == 0b011:  # c.ld on RV64, uimm[5:3|7:6]
            imm = (((hw >> 10) & 0x7) << 3) | (((hw >> 5) & 0x3) << 6)
            return make("c.ld", (Reg(rd_p), Reg(rs1_p), imm))
        if f3 == 0b101:
            imm = (((hw >> 10) & 0x7) << 3) | (((hw >> 5) & 0x3) << 6)
            return make("c.fsd", (FReg(rd_p), Reg(rs1_p), imm))
        if f3 == 0b110:
            imm = ((((hw >> 10) & 0x7) << 3) | (((hw >> 6) & 0x1) << 2)
                   | (((hw >> 5) & 0x1) << 6))
            return make("c.sw", (Reg(rd_p), Reg(rs1_p), imm))
        if f3 == 0b111:
            imm = (((hw >> 10) & 0x7) << 3) | (((hw >> 5) & 0x3) << 6)
            return make("c.sd", (Reg(rd_p), Reg(rs1_p), imm))
        return None  # f3 == 0b100 reserved

    if op == 0b01:
        rd = (hw >> 7) & 0x1F
        imm6 = _sx((((hw >> 12) & 0x1) << 5) | ((hw >> 2) & 0x1F), 6)
        if f3 == 0b000:
            if rd == 0 and imm6 == 0:
                return make("c.nop", ())
            return make("c.addi", (Reg(rd), imm6))  # rd=0 or imm=0 are hints
        if f3 == 0b001:  # c.addiw on RV64
            if rd == 0:
                return None
            return make("c.addiw", (Reg(rd), imm6))
        if f3 == 0b010:
            return make("c.li", (Reg(rd), imm6))
        if f3 == 0b011:
            if rd == 2:  # c.addi16sp, nzimm[9|4|6|8:7|5]
                imm = _sx((((hw >> 12) & 0x1) << 9) | (((hw >> 6) & 0x1) << 4)
                          | (((hw >> 5) & 0x1) << 6) | (((hw >> 3) & 0x3) << 7)
                          | (((hw >> 2) & 0x1) << 5), 10)
                if imm == 0:
                    return None
                return make("c.addi16sp", (imm,))
            if imm6 == 0:
                return None
            return make("c.lui", (Reg(rd), imm6))  # rd=0 is a hint
        if f3 == 0b100:
            kind = (hw >> 10) & 0x3
            rd_p = _creg((hw >> 7) & 0x7)
            if kind == 0b00:
                shamt = (((hw >> 12) & 0x1) << 5) | ((hw >> 2) & 0x1F)
                return make("c.srli", (Reg(rd_p), shamt))
            if kind == 0b01:
                shamt = (((hw >> 12) & 0x1) << 5) | ((hw >> 2) & 0x1F)
                return make("c.srai", (Reg(rd_p), shamt))
            if kind == 0b10:
                return make("c.andi", (Reg(rd_p), imm6))
            rs2_p = _creg((hw >> 2) & 0x7)
            sel = ((hw >> 12) & 0x1, (hw >> 5) & 0x3)
            table = {
                (0, 0): "c.sub", (0, 1): "c.xor", (0, 2): "c.or", (0, 3): "c.and",
                (1, 0): "c.subw", (1, 1): "c.addw",
            }
            mn = table.get(sel)
            if mn is None:
                return None
            return make(mn, (Reg(rd_p), Reg(rs2_p)))
        if f3 == 0b101:  # c.j, imm[11|4|9:8|10|6|7|3:1|5]
            imm = _sx((((hw >> 12) & 0x1) << 11) | (((hw >> 11) & 0x1) << 4)
                      | (((hw >> 9) & 0x3) << 8) | (((hw >> 8) & 0x1) << 10)
                      | (((hw >> 7) & 0x1) << 6) | (((hw >> 6) & 0x1) << 7)
                      | (((hw >> 3) & 0x7) << 1) | (((hw >> 2) & 0x1) << 5), 12)
            return make("c.j", (imm,))
        # c.beqz / c.bnez, imm[8|4:3|7:6|2:1|5]
        imm = _sx((((hw >> 12) & 0x1) << 8) | (((hw >> 10) & 0x3) << 3)
                  | (((hw >> 5) & 0x3) << 6) | (((hw >> 3) & 0x3) << 1)
                  | (((hw >> 2) & 0x1) << 5), 9)
        rs1_p = _creg((hw >> 7) & 0x7)
        mn = "c.beqz" if f3 == 0b110 else "c.bnez"
        return make(mn, (Reg(rs1_p), imm))

    # op == 0b10
    rd = (hw >> 7) & 0x1F
    rs2 = (hw >> 2) & 0x1F
    if f3 == 0b000:
        shamt = (((hw >> 12) & 0x1) << 5) | rs2
        return make("c.slli", (Reg(rd), shamt))  # rd=0 / shamt=0 are hints
    if f3 == 0b001:  # c.fldsp, uimm[5|4:3|8:6]
        imm = ((((hw >> 12) & 0x1) << 5) | (((hw >> 5) & 0x3) << 3)
               | (((hw >> 2) & 0x7) << 6))
        return make("c.fldsp", (FReg(rd), imm))
    if f3 == 0b010:  # c.lwsp, uimm[5|4:2|7:6]
        if rd == 0:
            return None
        imm = ((((hw >> 12) & 0x1) << 5) | (((hw >> 4) & 0x7) << 2)
               | (((hw >> 2) & 0x3) << 6))
        return make("c.lwsp", (Reg(rd), imm))
    if f3 == 0b011:  # c.ldsp on RV64, uimm[5|4:3|8:6]
        if rd == 0:
            return None
        imm = ((((hw >> 12) & 0x1) << 5) | (((hw >> 5) & 0x3) << 3)
               | (((hw >> 2) & 0x7) << 6))
        return make("c.ldsp", (Reg(rd), imm))
    if f3 == 0b100:
        bit12 = (hw >> 12) & 0x1
        if bit12 == 0:
            if rs2 == 0:
                if rd == 0:
                    return None  # reserved
                return make("c.jr", (Reg(rd),))
            return make("c.mv", (Reg(rd), Reg(rs2)))  # rd=0 is a hint
        if rs2 == 0:
            if rd == 0:
                return make("c.ebreak", ())
            return make("c.jalr", (Reg(rd),))
        return make("c.add", (Reg(rd), Reg(rs2)))  # rd=0 is a hint
    if f3 == 0b101:  # c.fsdsp, uimm[5:3|8:6]
        imm = (((hw >> 10) & 0x7) << 3) | (((hw >> 7) & 0x7) << 6)
        return make("c.fsdsp", (FReg(rs2), imm))
    if f3 == 0b110:  # c.swsp, uimm[5:2|7:6]
        imm = (((hw >> 9) & 0xF) << 2) | (((hw >> 7) & 0x3) << 6)
        return make("c.swsp", (Reg(rs2), imm))
    # c.sdsp, uimm[5:3|8:6]
    imm = (((hw >> 10) & 0x7) << 3) | (((hw >> 7) & 0x7) << 6)
    return make("c.sdsp", (Reg(rs2), imm))


def decode(data: bytes, address: int = 0):
    """Decode one instruction from raw bytes; None when invalid.

    Invalid covers reserved encodings, length-rule failures, and truncated
    input.
    """
    if len(data) < 2:
        return None
    hw = data[0] | (data[1] << 8)
    length = instr_length(hw)
    if length is None:
        return None
    if length == 2:
        return _decode_compressed(hw, address, bytes(data[:2]))
    if len(data) < 4:
        return None
    word = int.from_bytes(data[:4], "little")
    return _decode_word(word, address, bytes(data[:4]))


# ---------------------------------------------------------------------------
# Flow classification and successors
# ---------------------------------------------------------------------------

def flow_of(mnemonic: str, operands: tuple) -> Flow:
    """Control-flow class as a pure function of mnemonic and operands."""
    if mnemonic == "jal":
        return Flow.CALL if operands[0].index != 0 else Flow.DIRECT_JUMP
    if mnemonic == "jalr":
        return Flow.INDIRECT_CALL if operands[0].index != 0 else Flow.INDIRECT_JUMP
    if mnemonic == "c.j":
        return Flow.DIRECT_JUMP
    if mnemonic == "c.jr":
        return Flow.INDIRECT_JUMP
    if mnemonic == "c.jalr":
        return Flow.INDIRECT_CALL
    if mnemonic in ("c.beqz", "c.bnez") or mnemonic in _BRANCH_F3.values():
        return Flow.COND_BRANCH
    if mnemonic == "ecall":
        return Flow.SYSCALL
    if mnemonic in ("ebreak", "c.ebreak"):
        return Flow.HALTING
    return Flow.FALLTHROUGH


def successors(instr: Instr) -> tuple:
    """Statically known successor addresses of an instruction.

    Indirect jumps/calls and halts have none; those become points of
    interest downstream.  A direct call's return continuation is modelled
    as the static fallthrough.
    """
    addr, width = instr.address, instr.width
    flow = instr.flow
    if flow == Flow.FALLTHROUGH or flow == Flow.SYSCALL:
        return (addr + width,)
    if flow == Flow.DIRECT_JUMP:
        return (addr + instr.operands[-1],)
    if flow == Flow.COND_BRANCH:
        return (addr + width, addr + instr.operands[-1])
    if flow == Flow.CALL:
        return (addr + instr.operands[-1], addr + width)
    return ()


def overlap_class(instr: Instr) -> OverlapClass:
    """Overlap classification of a 32-bit instruction's upper halfword."""
    if instr.width != 4:
        raise ValueError("overlap_class requires a 4-byte instruction")
    upper = instr.raw[2] | (instr.raw[3] << 8)
    length = instr_length(upper)
    if length == 4:
        return OverlapClass.I1_CANDIDATE
    if length == 2 and _decode_compressed(upper, 0, bytes(instr.raw[2:4])) is not None:
        return OverlapClass.I2
    return OverlapClass.NONE


# ---------------------------------------------------------------------------
# Encode
# ---------------------------------------------------------------------------

def _want_reg(op, mnemonic):
    if not isinstance(op, Reg):
        raise EncodeError(f"{mnemonic}: expected integer register, got {op!r}")
    return op.index


def _want_imm(op, mnemonic, lo, hi, multiple=1):
    if isinstance(op, (Reg, FReg)) or not isinstance(op, int):
        raise EncodeError(f"{mnemonic}: expected immediate, got {op!r}")
    if not lo <= op <= hi or op % multiple:
        raise EncodeError(f"{mnemonic}: immediate {op} out of range "
                          f"[{lo}, {hi}] step {multiple}")
    return op


def _enc_u(opc, ops, mn):
    rd = _want_reg(ops[0], mn)
    imm = _want_imm(ops[1], mn, 0, 0xFFFFF)
    return (imm << 12) | (rd << 7) | opc


def _enc_i(opc, f3, ops, mn):
    rd = _want_reg(ops[0], mn)
    rs1 = _want_reg(ops[1], mn)
    imm = _want_imm(ops[2], mn, -2048, 2047)
    return ((imm & 0xFFF) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opc


def _enc_shift(f3, top6, ops, mn, width64=True):
    rd = _want_reg(ops[0], mn)
    rs1 = _want_reg(ops[1], mn)
    hi = 63 if width64 else 31
    shamt = _want_imm(ops[2], mn, 0, hi)
    opc = 0x13 if width64 else 0x1B
    return (top6 << 26) | (shamt << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opc


def _enc_s(f3, ops, mn):
    rs2 = _want_reg(ops[0], mn)
    rs1 = _want_reg(ops[1], mn)
    imm = _want_imm(ops[2], mn, -2048, 2047) & 0xFFF
    return (((imm >> 5) & 0x7F) << 25) | (rs2 << 20) | (rs1 << 15) \
        | (f3 << 12) | ((imm & 0x1F) << 7) | 0x23


def _enc_b(f3, ops, mn):
    rs1 = _want_reg(ops[0], mn)
    rs2 = _want_reg(ops[1], mn)
    imm = _want_imm(ops[2], mn, -4096, 4094, 2) & 0x1FFF
    return ((((imm >> 12) & 1) << 31) | (((imm >> 5) & 0x3F) << 25)
            | (rs2 << 20) | (rs1 << 15) | (f3 << 12)
            | (((imm >> 1) & 0xF) << 8) | (((imm >> 11) & 1) << 7) | 0x63)


def _enc_r(opc, f7, f3, ops, mn):
    rd = _want_reg(ops[0], mn)
    rs1 = _want_reg(ops[1], mn)
    rs2 = _want_reg(ops[2], mn)
    return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opc


def _enc_jal(ops, mn):
    rd = _want_reg(ops[0], mn)
    imm = _want_imm(ops[1], mn, -(1 << 20), (1 << 20) - 2, 2) & 0x1FFFFF
    return ((((imm >> 20) & 1) << 31) | (((imm >> 1) & 0x3FF) << 21)
            | (((imm >> 11) & 1) << 20) | (((imm >> 12) & 0xFF) << 12)
            | (rd << 7) | 0x6F)


def _enc_csr(f3, ops, mn):
    rd = _want_reg(ops[0], mn)
    csr = _want_imm(ops[1], mn, 0, 0xFFF)
    if f3 >= 5:
        src = _want_imm(ops[2], mn, 0, 31)
    else:
        src = _want_reg(ops[2], mn)
    return (csr << 20) | (src << 15) | (f3 << 12) | (rd << 7) | 0x73


def _want_creg(op, mn):
    idx = _want_reg(op, mn)
    if not 8 <= idx <= 15:
        raise EncodeError(f"{mn}: register must be x8-x15, got x{idx}")
    return idx - 8


def _enc_c_j(f3, ops, mn):
    imm = _want_imm(ops[0], mn, -2048, 2046, 2) & 0xFFF
    return ((f3 << 13) | (((imm >> 11) & 1) << 12) | (((imm >> 4) & 1) << 11)
            | (((imm >> 8) & 0x3) << 9) | (((imm >> 10) & 1) << 8)
            | (((imm >> 6) & 1) << 7) | (((imm >> 7) & 1) << 6)
            | (((imm >> 1) & 0x7) << 3) | (((imm >> 5) & 1) << 2) | 0b01)


def _enc_c_branch(f3, ops, mn):
    rs1 = _want_creg(ops[0], mn)
    imm = _want_imm(ops[1], mn, -256, 254, 2) & 0x1FF
    return ((f3 << 13) | (((imm >> 8) & 1) << 12) | (((imm >> 3) & 0x3) << 10)
            | (rs1 << 7) | (((imm >> 6) & 0x3) << 5) | (((imm >> 1) & 0x3) << 3)
            | (((imm >> 5) & 1) << 2) | 0b01)


def _enc_c_imm6(f3, ops, mn, nonzero=False, no_x0=False):
    rd = _want_reg(ops[0], mn)
    imm = _want_imm(ops[1], mn, -32, 31)
    if nonzero and imm == 0:
        raise EncodeError(f"{mn}: immediate must be non-zero")
    if no_x0 and rd == 0:
        raise EncodeError(f"{mn}: destination cannot be x0")
    imm &= 0x3F
    return ((f3 << 13) | (((imm >> 5) & 1) << 12) | (rd << 7)
            | ((imm & 0x1F) << 2) | 0b01)


def _enc_c_ls_d(f3, ops, mn, float_reg=False):
    # c.fld/c.ld/c.fsd/c.sd, uimm[5:3|7:6]
    if float_reg:
        if not isinstance(ops[0], FReg):
            raise EncodeError(f"{mn}: expected float register, got {ops[0]!r}")
        r = ops[0].index
        if not 8 <= r <= 15:
            raise EncodeError(f"{mn}: register must be f8-f15")
        r -= 8
    else:
        r = _want_creg(ops[0], mn)
    rs1 = _want_creg(ops[1], mn)
    imm = _want_imm(ops[2], mn, 0, 248, 8)
    return ((f3 << 13) | (((imm >> 3) & 0x7) << 10) | (rs1 << 7)
            | (((imm >> 6) & 0x3) << 5) | (r << 2) | 0b00)


def _enc_c_ls_w(f3, ops, mn):
    # c.lw/c.sw, uimm[5:3|2|6]
    r = _want_creg(ops[0], mn)
    rs1 = _want_creg(ops[1], mn)
    imm = _want_imm(ops[2], mn, 0, 124, 4)
    return ((f3 << 13) | (((imm >> 3) & 0x7) << 10) | (rs1 << 7)
            | (((imm >> 2) & 1) << 6) | (((imm >> 6) & 1) << 5) | (r << 2) | 0b00)


def _enc_c_arith(sel, ops, mn):
    rd = _want_creg(ops[0], mn)
    rs2 = _want_creg(ops[1], mn)
    bit12, f2 = sel
    return ((0b100 << 13) | (bit12 << 12) | (0b11 << 10) | (rd << 7)
            | (f2 << 5) | (rs2 << 2) | 0b01)


def _enc_c_shift_p(kind, ops, mn):
    rd = _want_creg(ops[0], mn)
    shamt = _want_imm(ops[1], mn, 0, 63)
    return ((0b100 << 13) | (((shamt >> 5) & 1) << 12) | (kind << 10)
            | (rd << 7) | ((shamt & 0x1F) << 2) | 0b01)


def _encode_halfword(mnemonic: str, ops: tuple):
    mn = mnemonic
    if mn == "c.nop":
        return 0x0001
    if mn == "c.addi":
        return _enc_c_imm6(0b000, ops, mn)
    if mn == "c.addiw":
        return _enc_c_imm6(0b001, ops, mn, no_x0=True)
    if mn == "c.li":
        return _enc_c_imm6(0b010, ops, mn)
    if mn == "c.lui":
        rd = _want_reg(ops[0], mn)
        if rd == 2:
            raise EncodeError("c.lui: destination cannot be sp")
        return _enc_c_imm6(0b011, ops, mn, nonzero=True)
    if mn == "c.addi16sp":
        imm = _want_imm(ops[0], mn, -512, 496, 16)
        if imm == 0:
            raise EncodeError("c.addi16sp: immediate must be non-zero")
        imm &= 0x3FF
        return ((0b011 << 13) | (((imm >> 9) & 1) << 12) | (2 << 7)
                | (((imm >> 4) & 1) << 6) | (((imm >> 6) & 1) << 5)
                | (((imm >> 7) & 0x3) << 3) | (((imm >> 5) & 1) << 2) | 0b01)
    if mn == "c.addi4spn":
        rd = _want_creg(ops[0], mn)
        imm = _want_imm(ops[1], mn, 4, 1020, 4)
        return ((0b000 << 13) | (((imm >> 4) & 0x3) << 11) | (((imm >> 6) & 0xF) << 7)
                | (((imm >> 2) & 1) << 6) | (((imm >> 3) & 1) << 5) | (rd << 2) | 0b00)
    if mn == "c.srli":
        return _enc_c_shift_p(0b00, ops, mn)
    if mn == "c.srai":
        return _enc_c_shift_p(0b01, ops, mn)
    if mn == "c.andi":
        rd = _want_creg(ops[0], mn)
        imm = _want_imm(ops[1], mn, -32, 31) & 0x3F
        return ((0b100 << 13) | (((imm >> 5) & 1) << 12) | (0b10 << 10)
                | (rd << 7) | ((imm & 0x1F) << 2) | 0b01)
    if mn in ("c.sub", "c.xor", "c.or", "c.and", "c.subw", "c.addw"):
        sel = {"c.sub": (0, 0), "c.xor": (0, 1), "c.or": (0, 2), "c.and": (0, 3),
               "c.subw": (1, 0), "c.addw": (1, 1)}[mn]
        return _enc_c_arith(sel, ops, mn)
    if mn == "c.j":
        return _enc_c_j(0b101, ops, mn)
    if mn == "c.beqz":
        return _enc_c_branch(0b110, ops, mn)
    if mn == "c.bnez":
        return _enc_c_branch(0b111, ops, mn)
    if mn == "c.slli":
        rd = _want_reg(ops[0], mn)
        shamt = _want_imm(ops[1], mn, 0, 63)
        return ((0b000 << 13) | (((shamt >> 5) & 1) << 12) | (rd << 7)
                | ((shamt & 0x1F) << 2) | 0b10)
    if mn in ("c.lwsp", "c.ldsp", "c.fldsp"):
        if mn == "c.fldsp":
            if not isinstance(ops[0], FReg):
                raise EncodeError(f"{mn}: expected float register")
            rd = ops[0].index
        else:
            rd = _want_reg(ops[0], mn)
            if rd == 0:
                raise EncodeError(f"{mn}: destination cannot be x0")
        if mn == "c.lwsp":
            imm = _want_imm(ops[1], mn, 0, 252, 4)
            return ((0b010 << 13) | (((imm >> 5) & 1) << 12) | (rd << 7)
                    | (((imm >> 2) & 0x7) << 4) | (((imm >> 6) & 0x3) << 2) | 0b10)
        f3 = 0b011 if mn == "c.ldsp" else 0b001
        imm = _want_imm(ops[1], mn, 0, 504, 8)
        return ((f3 << 13) | (((imm >> 5) & 1) << 12) | (rd << 7)
                | (((imm >> 3) & 0x3) << 5) | (((imm >> 6) & 0x7) << 2) | 0b10)
    if mn in ("c.swsp", "c.sdsp", "c.fsdsp"):
        if mn == "c.fsdsp":
            if not isinstance(ops[0], FReg):
                raise EncodeError(f"{mn}: expected float register")
            rs2 = ops[0].index
        else:
            rs2 = _want_reg(ops[0], mn)
        if mn == "c.swsp":
            imm = _want_imm(ops[1], mn, 0, 252, 4)
            return ((0b110 << 13) | (((imm >> 2) & 0xF) << 9)
                    | (((imm >> 6) & 0x3) << 7) | (rs2 << 2) | 0b10)
        f3 = 0b111 if mn == "c.sdsp" else 0b101
        imm = _want_imm(ops[1], mn, 0, 504, 8)
        return ((f3 << 13) | (((imm >> 3) & 0x7) << 10)
                | (((imm >> 6) & 0x7) << 7) | (rs2 << 2) | 0b10)
    if mn == "c.jr":
        rs1 = _want_reg(ops[0], mn)
        if rs1 == 0:
            raise EncodeError("c.jr: source cannot be x0")
        return (0b100 << 13) | (rs1 << 7) | 0b10
    if mn == "c.jalr":
        rs1 = _want_reg(ops[0], mn)
        if rs1 == 0:
            raise EncodeError("c.jalr: source cannot be x0")
        return (0b100 << 13) | (1 << 12) | (rs1 << 7) | 0b10
    if mn == "c.mv":
        rd = _want_reg(ops[0], mn)
        rs2 = _want_reg(ops[1], mn)
        if rs2 == 0:
            raise EncodeError("c.mv: source cannot be x0")
        return (0b100 << 13) | (rd << 7) | (rs2 << 2) | 0b10
    if mn == "c.add":
        rd = _want_reg(ops[0], mn)
        rs2 = _want_reg(ops[1], mn)
        if rs2 == 0:
            raise EncodeError("c.add: source cannot be x0")
        return (0b100 << 13) | (1 << 12) | (rd << 7) | (rs2 << 2) | 0b10
    if mn in ("c.lw", "c.sw"):
        return _enc_c_ls_w(0b010 if mn == "c.lw" else 0b110, ops, mn)
    if mn in ("c.ld", "c.sd"):
        return _enc_c_ls_d(0b011 if mn == "c.ld" else 0b111, ops, mn)
    if mn in ("c.fld", "c.fsd"):
        return _enc_c_ls_d(0b001 if mn == "c.fld" else 0b101, ops, mn, float_reg=True)
    if mn == "c.ebreak":
        return 0x9002
    return None


_OPIMM_BY_NAME = {v: k for k, v in _OPIMM_F3.items()}
_LOAD_BY_NAME = {v: k for k, v in _LOAD_F3.items()}
_STORE_BY_NAME = {v: k for k, v in _STORE_F3.items()}
_BRANCH_BY_NAME = {v: k for k, v in _BRANCH_F3.items()}
_OP_BY_NAME = {v: k for k, v in _OP_FUNCT.items()}
_OP32_BY_NAME = {v: k for k, v in _OP32_FUNCT.items()}
_CSR_BY_NAME = {v: k for k, v in _CSR_F3.items()}


def _encode_word(mnemonic: str, ops: tuple):
    mn = mnemonic
    if mn == "lui":
        return _enc_u(0x37, ops, mn)
    if mn == "auipc":
        return _enc_u(0x17, ops, mn)
    if mn == "jal":
        return _enc_jal(ops, mn)
    if mn == "jalr":
        return _enc_i(0x67, 0, ops, mn)
    if mn in _BRANCH_BY_NAME:
        return _enc_b(_BRANCH_BY_NAME[mn], ops, mn)
    if mn in _LOAD_BY_NAME:
        return _enc_i(0x03, _LOAD_BY_NAME[mn], ops, mn)
    if mn in _STORE_BY_NAME:
        return _enc_s(_STORE_BY_NAME[mn], ops, mn)
    if mn == "slli":
        return _enc_shift(1, 0x00, ops, mn)
    if mn == "srli":
        return _enc_shift(5, 0x00, ops, mn)
    if mn == "srai":
        return _enc_shift(5, 0x10, ops, mn)
    if mn in _OPIMM_BY_NAME:
        return _enc_i(0x13, _OPIMM_BY_NAME[mn], ops, mn)
    if mn == "addiw":
        return _enc_i(0x1B, 0, ops, mn)
    if mn == "slliw":
        return _enc_shift(1, 0x00, ops, mn, width64=False)
    if mn == "srliw":
        return _enc_shift(5, 0x00, ops, mn, width64=False)
    if mn == "sraiw":
        return _enc_shift(5, 0x10, ops, mn, width64=False)
    if mn in _OP_BY_NAME:
        f7, f3 = _OP_BY_NAME[mn]
        return _enc_r(0x33, f7, f3, ops, mn)
    if mn in _OP32_BY_NAME:
        f7, f3 = _OP32_BY_NAME[mn]
        return _enc_r(0x3B, f7, f3, ops, mn)
    if mn in _CSR_BY_NAME:
        return _enc_csr(_CSR_BY_NAME[mn], ops, mn)
    if mn == "ecall":
        return 0x00000073
    if mn == "ebreak":
        return 0x00100073
    return None


def encode(mnemonic: str, operands) -> bytes:
    """Encode a mnemonic plus operand tuple into little-endian bytes.

    Inverse of decode on the supported subset: decode(encode(m, ops))
    reproduces mnemonic and operands exactly.
    """
    ops = tuple(operands)
    try:
        hw = _encode_halfword(mnemonic, ops)
    except IndexError:
        raise EncodeError(f"{mnemonic}: wrong operand count") from None
    if hw is not None:
        return hw.to_bytes(2, "little")
    try:
        word = _encode_word(mnemonic, ops)
    except IndexError:
        raise EncodeError(f"{mnemonic}: wrong operand count") from None
    if word is None:
        raise EncodeError(f"unsupported mnemonic: {mnemonic}")
    return word.to_bytes(4, "little")


# ---------------------------------------------------------------------------
# Display
# ---------------------------------------------------------------------------

_MEM_FORMS = {"lb", "lh", "lw", "ld", "lbu", "lhu", "lwu", "flw", "fld",
              "sb", "sh", "sw", "sd", "fsw", "fsd", "jalr",
              "c.lw", "c.ld", "c.sw", "c.sd", "c.fld", "c.fsd"}
_SP_FORMS = {"c.lwsp", "c.ldsp", "c.fldsp", "c.swsp", "c.sdsp", "c.fsdsp"}
_HEX_IMM = {"lui", "auipc", "c.lui"}


def _op_text(op) -> str:
    if isinstance(op, Reg):
        return _ABI_NAMES[op.index]
    if isinstance(op, FReg):
        return _FABI_NAMES[op.index]
    return str(op)


def render(instr: Instr) -> str:
    """Assembly-style text with ABI register names, e.g. 'lw t2,0(s6)'."""
    mn, ops = instr.mnemonic, instr.operands
    if not ops:
        return mn
    if mn in _MEM_FORMS and len(ops) == 3:
        return f"{mn} {_op_text(ops[0])},{ops[2]}({_op_text(ops[1])})"
    if mn in _SP_FORMS:
        return f"{mn} {_op_text(ops[0])},{ops[1]}(sp)"
    if mn == "c.addi4spn":
        return f"{mn} {_op_text(ops[0])},sp,{ops[1]}"
    if mn in _HEX_IMM:
        imm = ops[1] if ops[1] >= 0 else ops[1] + (1 << 20)
        return f"{mn} {_op_text(ops[0])},{imm:#x}"
    return f"{mn} " + ",".join(_op_text(o) for o in ops)
