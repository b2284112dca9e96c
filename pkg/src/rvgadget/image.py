"""Load ELF64 executables or raw blobs into an immutable MemoryImage.

Only little-endian RV64 ELF files are accepted.  Every PT_LOAD segment is
retained; only those with the execute flag are ever scanned downstream.
Symbols are read from the symbol table on a best-effort basis (a damaged
or missing section table simply yields no symbols).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

__all__ = [
    "Segment",
    "Symbol",
    "MemoryImage",
    "ImageError",
    "BadMagic",
    "WrongClass",
    "WrongEndianness",
    "WrongMachine",
    "TruncatedHeader",
    "MalformedProgramHeader",
    "OverlappingSegments",
    "load_elf",
    "load_raw",
]

ELF_MAGIC = b"\x7fELF"
EM_RISCV = 243
PT_LOAD = 1
PF_X = 1
SHT_SYMTAB = 2

_EHDR = struct.Struct("<16sHHIQQQIHHHHHH")
_PHDR = struct.Struct("<IIQQQQQQ")
_SHDR = struct.Struct("<IIQQQQIIQQ")
_SYM = struct.Struct("<IBBHQQ")


class ImageError(Exception):
    """Base class for load failures; carries the file offset of the fault."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (offset {offset:#x})")
        self.offset = offset


class BadMagic(ImageError):
    pass


class WrongClass(ImageError):
    pass


class WrongEndianness(ImageError):
    pass


class WrongMachine(ImageError):
    pass


class TruncatedHeader(ImageError):
    pass


class MalformedProgramHeader(ImageError):
    pass


class OverlappingSegments(ImageError):
    pass


@dataclass(frozen=True)
class Segment:
    base: int
    data: bytes
    executable: bool

    @property
    def end(self) -> int:
        return self.base + len(self.data)

    def contains(self, address: int) -> bool:
        return self.base <= address < self.end


@dataclass(frozen=True)
class Symbol:
    name: str
    address: int
    size: int


@dataclass(frozen=True)
class MemoryImage:
    """Program bytes plus metadata, immutable after load.

    Executable segments are kept non-overlapping and sorted by base
    address; the entry point, when present, lies inside one of them.
    """

    segments: tuple = ()
    entry: int | None = None
    symbols: tuple = ()

    def __post_init__(self):
        execs = sorted((s for s in self.segments if s.executable),
                       key=lambda s: s.base)
        for a, b in zip(execs, execs[1:]):
            if a.end > b.base:
                raise OverlappingSegments(
                    f"executable segments [{a.base:#x},{a.end:#x}) and "
                    f"[{b.base:#x},{b.end:#x}) overlap")
        ordered = execs + [s for s in self.segments if not s.executable]
        object.__setattr__(self, "segments", tuple(ordered))
        if self.entry is not None and not any(
                s.contains(self.entry) for s in execs):
            raise ValueError(f"entry {self.entry:#x} outside executable segments")
        for sym in self.symbols:
            if not any(s.contains(sym.address) for s in self.segments):
                raise ValueError(f"symbol {sym.name} at {sym.address:#x} "
                                 "outside all segments")

    @property
    def executable_segments(self) -> tuple:
        return tuple(s for s in self.segments if s.executable)

    def segment_at(self, address: int):
        for seg in self.segments:
            if seg.contains(address):
                return seg
        return None

    def read(self, address: int, size: int):
        """Bytes at address, clipped to the containing segment; None outside."""
        seg = self.segment_at(address)
        if seg is None:
            return None
        off = address - seg.base
        return seg.data[off:off + size]

    def in_executable(self, address: int) -> bool:
        return any(s.contains(address) for s in self.executable_segments)


def load_raw(data: bytes, base: int) -> MemoryImage:
    """Wrap a raw blob as a single executable segment at a base address."""
    return MemoryImage(segments=(Segment(base, bytes(data), True),))


def _parse_symbols(data: bytes, shoff: int, shentsize: int, shnum: int):
    """Best-effort symbol table parse; malformed tables yield no symbols."""
    if shoff == 0 or shnum == 0 or shentsize < _SHDR.size:
        return []
    if shoff + shnum * shentsize > len(data):
        return []
    headers = []
    for i in range(shnum):
        headers.append(_SHDR.unpack_from(data, shoff + i * shentsize))
    symbols = []
    for sh in headers:
        sh_type, sh_offset, sh_size, sh_link, sh_entsize = \
            sh[1], sh[4], sh[5], sh[6], sh[9]
        if sh_type != SHT_SYMTAB or sh_entsize < _SYM.size:
            continue
        if sh_link >= len(headers):
            continue
        str_off, str_size = headers[sh_link][4], headers[sh_link][5]
        if str_off + str_size > len(data) or sh_offset + sh_size > len(data):
            continue
        strtab = data[str_off:str_off + str_size]
        count = sh_size // sh_entsize
        for i in range(count):
            st_name, st_info, _, st_shndx, st_value, st_size = _SYM.unpack_from(
                data, sh_offset + i * sh_entsize)
            if st_name == 0 or st_name >= len(strtab):
                continue
            end = strtab.find(b"\0", st_name)
            if end < 0:
                continue
            name = strtab[st_name:end].decode("ascii", "replace")
            symbols.append((name, st_value, st_size))
    return symbols


def load_elf(data: bytes) -> MemoryImage:
    """Parse an ELF64 little-endian RV64 executable into a MemoryImage.

    All PT_LOAD segments are loaded; the execute flag marks the scannable
    ones.  An entry point that falls outside every executable segment is
    treated as absent.
    """
    if len(data) < 4:
        raise TruncatedHeader("input shorter than ELF magic", len(data))
    if data[:4] != ELF_MAGIC:
        raise BadMagic("not an ELF file", 0)
    if len(data) < 5 or data[4] != 2:
        raise WrongClass("not ELF64", 4)
    if len(data) < 6 or data[5] != 1:
        raise WrongEndianness("not little-endian", 5)
    if len(data) < _EHDR.size:
        raise TruncatedHeader("ELF header truncated", len(data))
    (_, _, e_machine, _, e_entry, e_phoff, e_shoff, _, _, e_phentsize,
     e_phnum, e_shentsize, e_shnum, _) = _EHDR.unpack_from(data, 0)
    if e_machine != EM_RISCV:
        raise WrongMachine(f"machine {e_machine}, expected {EM_RISCV}", 18)
    if e_phnum and e_phentsize < _PHDR.size:
        raise MalformedProgramHeader(
            f"program header entry size {e_phentsize}", 54)

    segments = []
    for i in range(e_phnum):
        off = e_phoff + i * e_phentsize
        if off + _PHDR.size > len(data):
            raise MalformedProgramHeader(f"program header {i} truncated", off)
        p_type, p_flags, p_offset, p_vaddr, _, p_filesz, p_memsz, _ = \
            _PHDR.unpack_from(data, off)
        if p_type != PT_LOAD:
            continue
        if p_filesz > p_memsz or p_offset + p_filesz > len(data):
            raise MalformedProgramHeader(
                f"program header {i} points outside the file", off)
        payload = data[p_offset:p_offset + p_filesz]
        if p_memsz > p_filesz:
            payload += b"\0" * (p_memsz - p_filesz)
        segments.append(Segment(p_vaddr, payload, bool(p_flags & PF_X)))

    entry = e_entry
    if not any(s.executable and s.contains(entry) for s in segments):
        entry = None

    raw_symbols = _parse_symbols(data, e_shoff, e_shentsize, e_shnum)
    symbols = tuple(
        Symbol(name, value, size) for name, value, size in raw_symbols
        if any(s.contains(value) for s in segments))
    return MemoryImage(segments=tuple(segments), entry=entry, symbols=symbols)
