"""Object-oriented frontend: parse server-side source units and extract
entities plus intra-language dependency edges."""

from webdeps.oo.nodes import (
    AnnotationUse,
    ClassDecl,
    CompilationUnit,
    FieldDecl,
    MethodDecl,
)
from webdeps.oo.parser import OoSyntaxError, parse_unit
from webdeps.oo.extract import (
    LookupSite,
    OoIndex,
    StringWriteSite,
    collect_lookup_sites,
    collect_string_writes,
    declare_units,
    emit_oo_edges,
    extract_oo_graph,
)

__all__ = [
    "AnnotationUse",
    "ClassDecl",
    "CompilationUnit",
    "FieldDecl",
    "LookupSite",
    "MethodDecl",
    "OoIndex",
    "OoSyntaxError",
    "StringWriteSite",
    "collect_lookup_sites",
    "collect_string_writes",
    "declare_units",
    "emit_oo_edges",
    "extract_oo_graph",
    "parse_unit",
]
