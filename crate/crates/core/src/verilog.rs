// SPDX-License-Identifier: Apache-2.0

//! Structural Verilog output for mapped netlists.

use std::fmt::Write as _;

use crate::library::Library;
use crate::mapper::MappedNetlist;

/// Turns an arbitrary name into a Verilog identifier, escaping when needed.
pub fn identifier(name: &str) -> String {
    let simple = !name.is_empty()
        && name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$');
    if simple {
        name.to_string()
    } else {
        format!("\\{} ", name.replace(char::is_whitespace, "_"))
    }
}

/// One module with ports `pi<i>` and `po<i>`, a wire per internal net, and
/// one instantiation per cell using named pin connections.
pub fn write_verilog(n: &MappedNetlist, lib: &Library) -> String {
    let module = if n.name.is_empty() { "top".to_string() } else { identifier(&n.name) };
    let mut is_input = vec![false; n.nets.len()];
    for &i in &n.inputs {
        is_input[i] = true;
    }
    let net = |id: usize| identifier(&n.nets[id]);
    let mut out = String::new();
    let ports: Vec<String> = (0..n.inputs.len()).map(|i| format!("pi{i}")).chain((0..n.outputs.len()).map(|i| format!("po{i}"))).collect();
    writeln!(out, "module {module} ({});", ports.join(", ")).unwrap();
    for i in 0..n.inputs.len() {
        writeln!(out, "  input pi{i};").unwrap();
    }
    for i in 0..n.outputs.len() {
        writeln!(out, "  output po{i};").unwrap();
    }
    for (id, name) in n.nets.iter().enumerate() {
        if !is_input[id] {
            writeln!(out, "  wire {};", identifier(name)).unwrap();
        }
    }
    for (i, &id) in n.inputs.iter().enumerate() {
        if n.nets[id] != format!("pi{i}") {
            writeln!(out, "  assign {} = pi{i};", net(id)).unwrap();
        }
    }
    for inst in &n.instances {
        let cell = &lib.cells[inst.cell];
        let mut conns: Vec<String> = cell.pins.iter().zip(&inst.inputs).map(|(pin, &id)| format!(".{}({})", pin.name, net(id))).collect();
        conns.push(format!(".{}({})", cell.output, net(inst.output)));
        writeln!(out, "  {} {} ({});", identifier(&cell.name), identifier(&inst.name), conns.join(", ")).unwrap();
    }
    for (i, &id) in n.outputs.iter().enumerate() {
        writeln!(out, "  assign po{i} = {};", net(id)).unwrap();
    }
    out.push_str("endmodule\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::AigBuilder;
    use crate::library::parse_genlib;
    use crate::mapper::{map_delay, CostModel};

    #[test]
    fn and2_on_two_cell_library() {
        let lib = parse_genlib("GATE inv1 1 O=!a; PIN a INV 1 999 10 0 10 0\nGATE nand2 2 O=!(a*b); PIN * INV 1 999 20 0 20 0\n").unwrap();
        let mut b = AigBuilder::new("and2");
        let x = b.add_input();
        let y = b.add_input();
        let z = b.add_and(x, y);
        b.add_output(z);
        let m = map_delay(&b.finish(), &lib, CostModel::LibraryPin, None).unwrap();
        let v = write_verilog(&m.netlist, &lib);
        assert_eq!(
            v,
            "module and2 (pi0, pi1, po0);\n  input pi0;\n  input pi1;\n  output po0;\n  wire n3_c;\n  wire n3;\n  \
             nand2 g0 (.a(pi0), .b(pi1), .O(n3_c));\n  inv1 g1 (.a(n3_c), .O(n3));\n  assign po0 = n3;\nendmodule\n"
        );
    }

    #[test]
    fn escaping() {
        assert_eq!(identifier("abc_1"), "abc_1");
        assert_eq!(identifier("1abc"), "\\1abc ");
        assert_eq!(identifier("a b"), "\\a_b ");
    }
}
