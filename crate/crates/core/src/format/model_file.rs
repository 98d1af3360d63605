use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::lexer::{is_identifier, quote, tokenize, Token};
use super::{numbered_lines, FaultCode, Faults, ParseFault};
use crate::model::{
    check_model, Block, ConnStatus, Connection, Discipline, ModelFault, PlantModel, Port,
    PortKind,
};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("model is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InvalidModel(pub Vec<ModelFault>);

struct Located<T> {
    line: usize,
    column: usize,
    item: T,
}

struct BlockDecl {
    block: Block,
    parent_column: usize,
}

struct ConnectDecl {
    id: String,
    ends: [(String, usize); 2],
    initial: ConnStatus,
}

/// Collects `key=value` attributes, rejecting unknown and repeated keys.
fn attributes<'t>(
    tokens: &'t [Token],
    allowed: &[&str],
    line: usize,
    faults: &mut Faults<'_>,
) -> Option<HashMap<&'t str, &'t Token>> {
    let mut out = HashMap::new();
    let mut ok = true;
    for tok in tokens {
        match &tok.key {
            Some(k) if allowed.contains(&k.as_str()) => {
                if out.insert(k.as_str(), tok).is_some() {
                    faults.push(line, tok.column, FaultCode::Syntax, format!("repeated attribute {k}"));
                    ok = false;
                }
            }
            Some(k) => {
                faults.push(line, tok.column, FaultCode::Syntax, format!("unknown attribute {k}"));
                ok = false;
            }
            None => {
                faults.push(
                    line,
                    tok.column,
                    FaultCode::Syntax,
                    format!("unexpected token {:?}", tok.value),
                );
                ok = false;
            }
        }
    }
    ok.then_some(out)
}

/// Requires a bare identifier token.
fn ident(tok: Option<&Token>, line: usize, end_column: usize, what: &str, faults: &mut Faults<'_>) -> Option<(String, usize)> {
    match tok {
        Some(t) if t.key.is_none() && !t.quoted && is_identifier(&t.value) => {
            Some((t.value.clone(), t.column))
        }
        Some(t) => {
            faults.push(line, t.column, FaultCode::Syntax, format!("expected {what}, found {:?}", t.value));
            None
        }
        None => {
            faults.push(line, end_column, FaultCode::Syntax, format!("missing {what}"));
            None
        }
    }
}

pub fn parse_model<S: Scalar>(text: &str) -> Result<PlantModel<S>, Vec<ParseFault>> {
    parse_model_in("<input>", text)
}

/// Like [`parse_model`], with `file` recorded in fault spans.
pub fn parse_model_in<S: Scalar>(file: &str, text: &str) -> Result<PlantModel<S>, Vec<ParseFault>> {
    let mut faults = Faults::new(file);
    let mut header: Option<String> = None;
    let mut seen_decl = false;
    let mut blocks: Vec<Located<BlockDecl>> = Vec::new();
    let mut ports: Vec<Located<Port>> = Vec::new();
    let mut connects: Vec<Located<ConnectDecl>> = Vec::new();
    let mut observables: Vec<Located<(String, S)>> = Vec::new();

    for (line, raw) in numbered_lines(text) {
        let tokens = match tokenize(raw) {
            Ok(t) => t,
            Err(e) => {
                faults.push(line, e.column, FaultCode::Syntax, e.message);
                seen_decl = true;
                continue;
            }
        };
        let Some(first) = tokens.first() else { continue };
        let end_column = raw.chars().count() + 1;
        let keyword = if first.key.is_none() && !first.quoted {
            first.value.as_str()
        } else {
            ""
        };
        let is_first_decl = !seen_decl;
        seen_decl = true;
        if keyword == "model" {
            if !is_first_decl {
                faults.push(line, first.column, FaultCode::Syntax, "model header must be the first declaration and appear once");
                continue;
            }
            if let Some((id, _)) = ident(tokens.get(1), line, end_column, "model id", &mut faults) {
                header = Some(id);
            }
            if let Some(extra) = tokens.get(2) {
                faults.push(line, extra.column, FaultCode::Syntax, "unexpected token after model id");
            }
            continue;
        }
        if is_first_decl {
            faults.push(line, first.column, FaultCode::Syntax, "expected `model <id>` header");
        }
        match keyword {
            "block" => {
                let Some((id, column)) = ident(tokens.get(1), line, end_column, "block id", &mut faults) else { continue };
                let Some(attrs) = attributes(&tokens[2..], &["kind", "parent", "name"], line, &mut faults) else { continue };
                let discipline = match attrs.get("kind") {
                    None => {
                        faults.push(line, column, FaultCode::Syntax, "block needs kind=");
                        continue;
                    }
                    Some(t) => match Discipline::from_keyword(&t.value).filter(|_| !t.quoted) {
                        Some(d) => d,
                        None => {
                            faults.push(line, t.column, FaultCode::Syntax, format!("unknown discipline {:?}", t.value));
                            continue;
                        }
                    },
                };
                let mut parent_column = 0;
                let parent = match attrs.get("parent") {
                    Some(t) if !t.quoted && is_identifier(&t.value) => {
                        parent_column = t.column;
                        Some(t.value.clone())
                    }
                    Some(t) => {
                        faults.push(line, t.column, FaultCode::Syntax, "parent must be a block id");
                        continue;
                    }
                    None => None,
                };
                let name = attrs.get("name").map_or_else(|| id.clone(), |t| t.value.clone());
                blocks.push(Located {
                    line,
                    column,
                    item: BlockDecl {
                        block: Block { id, name, discipline, parent },
                        parent_column,
                    },
                });
            }
            "port" => {
                let Some((id, column)) = ident(tokens.get(1), line, end_column, "port id", &mut faults) else { continue };
                let Some((owner, local)) = id.rsplit_once('.') else {
                    faults.push(line, column, FaultCode::Syntax, "port id must be <block-id>.<port-name>");
                    continue;
                };
                if owner.is_empty() || local.is_empty() {
                    faults.push(line, column, FaultCode::Syntax, "port id must be <block-id>.<port-name>");
                    continue;
                }
                let owner = owner.to_owned();
                let Some(attrs) = attributes(&tokens[2..], &["kind"], line, &mut faults) else { continue };
                let kind = match attrs.get("kind") {
                    None => {
                        faults.push(line, column, FaultCode::Syntax, "port needs kind=");
                        continue;
                    }
                    Some(t) => match PortKind::from_keyword(&t.value).filter(|_| !t.quoted) {
                        Some(k) => k,
                        None => {
                            faults.push(line, t.column, FaultCode::Syntax, format!("unknown port kind {:?}", t.value));
                            continue;
                        }
                    },
                };
                ports.push(Located { line, column, item: Port { id, owner, kind } });
            }
            "connect" => {
                let Some((id, column)) = ident(tokens.get(1), line, end_column, "connection id", &mut faults) else { continue };
                let Some(a) = ident(tokens.get(2), line, end_column, "port id", &mut faults) else { continue };
                let Some(b) = ident(tokens.get(3), line, end_column, "port id", &mut faults) else { continue };
                let rest = tokens.get(4..).unwrap_or(&[]);
                let Some(attrs) = attributes(rest, &["initial"], line, &mut faults) else { continue };
                let initial = match attrs.get("initial") {
                    None => ConnStatus::Connected,
                    Some(t) => match ConnStatus::from_keyword(&t.value).filter(|_| !t.quoted) {
                        Some(s) => s,
                        None => {
                            faults.push(line, t.column, FaultCode::Syntax, "initial must be connected or disconnected");
                            continue;
                        }
                    },
                };
                if a.0 == b.0 {
                    faults.push(line, b.1, FaultCode::Syntax, "connection joins a port to itself");
                    continue;
                }
                connects.push(Located { line, column, item: ConnectDecl { id, ends: [a, b], initial } });
            }
            "observable" => {
                let Some((name, column)) = ident(tokens.get(1), line, end_column, "observable name", &mut faults) else { continue };
                match tokens.get(2) {
                    Some(t) if t.is_bare("=") => {}
                    Some(t) => {
                        faults.push(line, t.column, FaultCode::Syntax, "expected `=`");
                        continue;
                    }
                    None => {
                        faults.push(line, end_column, FaultCode::Syntax, "expected `=`");
                        continue;
                    }
                }
                let value = match tokens.get(3) {
                    Some(t) if t.key.is_none() && !t.quoted => match S::from_decimal(&t.value) {
                        Some(v) => v,
                        None => {
                            faults.push(line, t.column, FaultCode::BadNumber, format!("not a decimal: {:?}", t.value));
                            continue;
                        }
                    },
                    Some(t) => {
                        faults.push(line, t.column, FaultCode::BadNumber, "expected a decimal value");
                        continue;
                    }
                    None => {
                        faults.push(line, end_column, FaultCode::BadNumber, "missing value");
                        continue;
                    }
                };
                if let Some(extra) = tokens.get(4) {
                    faults.push(line, extra.column, FaultCode::Syntax, "unexpected token after value");
                    continue;
                }
                observables.push(Located { line, column, item: (name, value) });
            }
            _ => {
                faults.push(line, first.column, FaultCode::UnknownKeyword, format!("unknown declaration {:?}", first.value));
            }
        }
    }

    if !seen_decl {
        faults.push(1, 1, FaultCode::Syntax, "expected `model <id>` header");
    }

    // Reference resolution happens after all lines are read so that
    // declaration order does not matter.
    let mut block_index: HashMap<&str, &Block> = HashMap::new();
    for decl in &blocks {
        let b = &decl.item.block;
        if block_index.contains_key(b.id.as_str()) {
            faults.push(decl.line, decl.column, FaultCode::DuplicateId, format!("duplicate block {}", b.id));
        } else {
            block_index.insert(&b.id, b);
        }
    }
    for decl in &blocks {
        let b = &decl.item.block;
        let Some(parent) = &b.parent else { continue };
        if !block_index.contains_key(parent.as_str()) {
            faults.push(decl.line, decl.item.parent_column, FaultCode::DanglingRef, format!("unknown parent block {parent}"));
            continue;
        }
        let mut current = Some(parent.as_str());
        let mut hops = 0;
        while let Some(id) = current {
            if id == b.id {
                faults.push(decl.line, decl.item.parent_column, FaultCode::DanglingRef, format!("containment cycle through {}", b.id));
                break;
            }
            hops += 1;
            if hops > blocks.len() {
                break;
            }
            current = block_index.get(id).and_then(|p| p.parent.as_deref());
        }
    }

    let mut port_index: HashMap<&str, &Port> = HashMap::new();
    for decl in &ports {
        let p = &decl.item;
        if port_index.contains_key(p.id.as_str()) {
            faults.push(decl.line, decl.column, FaultCode::DuplicateId, format!("duplicate port {}", p.id));
            continue;
        }
        port_index.insert(&p.id, p);
        if !block_index.contains_key(p.owner.as_str()) {
            faults.push(decl.line, decl.column, FaultCode::DanglingRef, format!("port {} belongs to unknown block {}", p.id, p.owner));
        }
    }

    let mut conn_ids: HashMap<&str, ()> = HashMap::new();
    let mut connections = Vec::new();
    for decl in &connects {
        let c = &decl.item;
        if conn_ids.insert(&c.id, ()).is_some() {
            faults.push(decl.line, decl.column, FaultCode::DuplicateId, format!("duplicate connection {}", c.id));
            continue;
        }
        let mut kinds = Vec::new();
        for (port, column) in &c.ends {
            match port_index.get(port.as_str()) {
                Some(p) => kinds.push(p.kind),
                None => faults.push(decl.line, *column, FaultCode::DanglingRef, format!("unknown port {port}")),
            }
        }
        if let [ka, kb] = kinds[..] {
            if ka != kb {
                faults.push(
                    decl.line,
                    decl.column,
                    FaultCode::KindMismatch,
                    format!("connection {} joins a {ka} port to a {kb} port", c.id),
                );
                continue;
            }
            connections.push(Connection {
                id: c.id.clone(),
                a: c.ends[0].0.clone(),
                b: c.ends[1].0.clone(),
                kind: ka,
                initial: c.initial,
            });
        }
    }

    let mut observable_map = BTreeMap::new();
    for decl in &observables {
        let (name, value) = &decl.item;
        if observable_map.insert(name.clone(), *value).is_some() {
            faults.push(decl.line, decl.column, FaultCode::DuplicateId, format!("duplicate observable {name}"));
        }
    }

    if !faults.is_empty() {
        return Err(faults.into_sorted());
    }
    let model = PlantModel {
        id: header.unwrap_or_default(),
        blocks: blocks.into_iter().map(|d| d.item.block).collect(),
        ports: ports.into_iter().map(|d| d.item).collect(),
        connections,
        observables: observable_map,
    };
    debug_assert!(check_model(&model).is_empty(), "{:?}", check_model(&model));
    Ok(model)
}

/// Canonical text: header, then blocks, ports, connections and observables,
/// each group sorted by id. Structurally equal models serialize to the same
/// bytes.
pub fn serialize_model<S: Scalar>(model: &PlantModel<S>) -> Result<String, InvalidModel> {
    let faults = check_model(model);
    if !faults.is_empty() {
        return Err(InvalidModel(faults));
    }
    let model = model.canonicalized();
    let mut out = format!("model {}\n", model.id);
    for b in &model.blocks {
        out.push_str(&format!("block {} kind={}", b.id, b.discipline));
        if let Some(parent) = &b.parent {
            out.push_str(&format!(" parent={parent}"));
        }
        if b.name != b.id {
            out.push_str(&format!(" name={}", quote(&b.name)));
        }
        out.push('\n');
    }
    for p in &model.ports {
        out.push_str(&format!("port {} kind={}\n", p.id, p.kind));
    }
    for c in &model.connections {
        out.push_str(&format!("connect {} {} {}", c.id, c.a, c.b));
        if c.initial == ConnStatus::Disconnected {
            out.push_str(" initial=disconnected");
        }
        out.push('\n');
    }
    for (name, value) in &model.observables {
        out.push_str(&format!("observable {name} = {}\n", value.to_decimal()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(text: &str) -> Vec<(usize, usize, FaultCode)> {
        parse_model::<f64>(text)
            .unwrap_err()
            .into_iter()
            .map(|f| (f.span.line, f.span.column, f.code))
            .collect()
    }

    #[test]
    fn minimal_document() {
        let m = parse_model::<f64>("model m\n").unwrap();
        assert_eq!(m, PlantModel::new("m"));
        assert_eq!(serialize_model(&m).unwrap(), "model m\n");
    }

    #[test]
    fn comments_blank_lines_and_crlf() {
        let text = "# plant\r\n\r\nmodel m   # header\r\nblock A kind=software\r\n";
        let m = parse_model::<f64>(text).unwrap();
        assert_eq!(m.blocks.len(), 1);
    }

    #[test]
    fn forward_references_resolve() {
        let text = "model m\nconnect c A.p B.q\nport A.p kind=signal\nport B.q kind=signal\nblock B kind=software parent=A\nblock A kind=mechatronic_module\n";
        let m = parse_model::<f64>(text).unwrap();
        assert_eq!(m.connections[0].kind, PortKind::Signal);
        assert_eq!(m.blocks[0].parent.as_deref(), Some("A"));
    }

    #[test]
    fn kind_mismatch() {
        let text = "model m\nblock A kind=mechanical\nblock B kind=mechanical\nport A.p kind=pneumatic\nport B.q kind=electrical\nconnect c1 A.p B.q\n";
        assert_eq!(codes(text), vec![(6, 9, FaultCode::KindMismatch)]);
    }

    #[test]
    fn fault_codes() {
        assert_eq!(codes(""), vec![(1, 1, FaultCode::Syntax)]);
        assert_eq!(codes("block A kind=software\n"), vec![(1, 1, FaultCode::Syntax)]);
        assert_eq!(codes("model m\nwidget A\n"), vec![(2, 1, FaultCode::UnknownKeyword)]);
        assert_eq!(
            codes("model m\nblock A kind=software\nblock A kind=software\n"),
            vec![(3, 7, FaultCode::DuplicateId)]
        );
        assert_eq!(codes("model m\nobservable p = 6,0\n"), vec![(2, 16, FaultCode::BadNumber)]);
        assert_eq!(
            codes("model m\nblock A kind=software parent=Z\n"),
            vec![(2, 23, FaultCode::DanglingRef)]
        );
        assert_eq!(codes("model m\nport A.p kind=signal\n"), vec![(2, 6, FaultCode::DanglingRef)]);
        assert_eq!(codes("model m\nblock A kind=plastic\n"), vec![(2, 9, FaultCode::Syntax)]);
        assert_eq!(codes("model m\nmodel n\n"), vec![(2, 1, FaultCode::Syntax)]);
        assert_eq!(
            codes("model m\nblock A kind=software parent=B\nblock B kind=software parent=A\n"),
            vec![(2, 23, FaultCode::DanglingRef), (3, 23, FaultCode::DanglingRef)]
        );
    }

    #[test]
    fn faults_are_sorted_by_position() {
        let faults = parse_model::<f64>("model m\nconnect c X.a Y.b\nbogus\nblock 1 kind=software\n").unwrap_err();
        let positions: Vec<_> = faults.iter().map(|f| (f.span.line, f.span.column)).collect();
        let mut sorted = positions.clone();
        sorted.sort();
        assert_eq!(positions, sorted);
        assert_eq!(faults.len(), 4);
    }

    #[test]
    fn names_round_trip_with_escapes() {
        let text = "model m\nblock A kind=software name=\"The \\\"A\\\" \\\\ block\"\n";
        let m = parse_model::<f64>(text).unwrap();
        assert_eq!(m.blocks[0].name, r#"The "A" \ block"#);
        assert_eq!(serialize_model(&m).unwrap(), text);
    }

    #[test]
    fn serializer_rejects_invalid_models() {
        let mut m = PlantModel::<f64>::new("m");
        m.blocks.push(Block::new("A", Discipline::Software).with_parent("Q"));
        assert!(matches!(serialize_model(&m), Err(InvalidModel(_))));
    }

    #[test]
    fn exact_observables() {
        let m = parse_model::<crate::Exact>("model m\nobservable p = 2.60\n").unwrap();
        assert_eq!(serialize_model(&m).unwrap(), "model m\nobservable p = 2.6\n");
    }
}
