use super::lexer::{is_identifier, quote, tokenize, Token};
use super::{numbered_lines, FaultCode, Faults, ParseFault};
use crate::model::{Comparator, ModelOp, PlantModel};
use crate::procedure::{Constraint, Lesson, Step};
use crate::scalar::Scalar;

pub fn parse_lesson<S: Scalar>(text: &str, model: &PlantModel<S>) -> Result<Lesson<S>, Vec<ParseFault>> {
    parse_lesson_in("<input>", text, model)
}

struct LineCtx<'a, 'f> {
    line: usize,
    end_column: usize,
    faults: &'a mut Faults<'f>,
}

impl LineCtx<'_, '_> {
    fn fault(&mut self, column: usize, code: FaultCode, message: impl Into<String>) {
        self.faults.push(self.line, column, code, message);
    }

    fn bare<'t>(&mut self, tok: Option<&'t Token>, what: &str) -> Option<&'t Token> {
        match tok {
            Some(t) if t.key.is_none() && !t.quoted => Some(t),
            Some(t) => {
                self.fault(t.column, FaultCode::Syntax, format!("expected {what}"));
                None
            }
            None => {
                self.fault(self.end_column, FaultCode::Syntax, format!("missing {what}"));
                None
            }
        }
    }

    fn ident(&mut self, tok: Option<&Token>, what: &str) -> Option<String> {
        let t = self.bare(tok, what)?;
        if is_identifier(&t.value) {
            Some(t.value.clone())
        } else {
            self.fault(t.column, FaultCode::Syntax, format!("expected {what}, found {:?}", t.value));
            None
        }
    }

    fn comparator(&mut self, tok: Option<&Token>) -> Option<Comparator> {
        let t = self.bare(tok, "comparator")?;
        let cmp = Comparator::from_symbol(&t.value);
        if cmp.is_none() {
            self.fault(t.column, FaultCode::Syntax, format!("expected ==, <= or >=, found {:?}", t.value));
        }
        cmp
    }

    fn decimal<S: Scalar>(&mut self, tok: Option<&Token>) -> Option<S> {
        let t = self.bare(tok, "decimal")?;
        let v = S::from_decimal(&t.value);
        if v.is_none() {
            self.fault(t.column, FaultCode::BadNumber, format!("not a decimal: {:?}", t.value));
        }
        v
    }

    fn keyed<'t>(&mut self, tok: Option<&'t Token>, key: &str) -> Option<&'t Token> {
        match tok {
            Some(t) if t.key.as_deref() == Some(key) => Some(t),
            Some(t) => {
                self.fault(t.column, FaultCode::Syntax, format!("expected {key}="));
                None
            }
            None => {
                self.fault(self.end_column, FaultCode::Syntax, format!("missing {key}="));
                None
            }
        }
    }

    fn no_more(&mut self, tokens: &[Token], from: usize) -> Option<()> {
        match tokens.get(from) {
            Some(t) => {
                self.fault(t.column, FaultCode::Syntax, "unexpected trailing token");
                None
            }
            None => Some(()),
        }
    }
}

/// Like [`parse_lesson`], with `file` recorded in fault spans.
pub fn parse_lesson_in<S: Scalar>(
    file: &str,
    text: &str,
    model: &PlantModel<S>,
) -> Result<Lesson<S>, Vec<ParseFault>> {
    let mut faults = Faults::new(file);
    let mut lesson: Option<Lesson<S>> = None;
    let mut constraints = Vec::new();
    let mut reverse_pairs = Vec::new();
    let mut steps = Vec::new();
    let mut seen_decl = false;

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
        let keyword = if first.key.is_none() && !first.quoted { first.value.clone() } else { String::new() };
        let first_column = first.column;
        let is_first_decl = !seen_decl;
        seen_decl = true;
        let mut cx = LineCtx { line, end_column: raw.chars().count() + 1, faults: &mut faults };

        if keyword == "lesson" {
            if !is_first_decl {
                cx.fault(first_column, FaultCode::Syntax, "lesson header must be the first declaration and appear once");
                continue;
            }
            let Some(id) = cx.ident(tokens.get(1), "lesson id") else { continue };
            let Some(model_tok) = cx.keyed(tokens.get(2), "model") else { continue };
            if cx.no_more(&tokens, 3).is_none() {
                continue;
            }
            if model_tok.value != model.id {
                cx.fault(model_tok.column, FaultCode::DanglingRef, format!("lesson targets model {:?}, loaded model is {:?}", model_tok.value, model.id));
            }
            lesson = Some(Lesson::new(id, model_tok.value.clone()));
            continue;
        }
        if is_first_decl {
            cx.fault(first_column, FaultCode::Syntax, "expected `lesson <id> model=<model-id>` header");
        }

        match keyword.as_str() {
            "constraint" => {
                let Some(kind) = cx.bare(tokens.get(1), "constraint kind") else { continue };
                match kind.value.as_str() {
                    "precedence" => {
                        let Some(before) = cx.ident(tokens.get(2), "class") else { continue };
                        match cx.bare(tokens.get(3), "`<`") {
                            Some(t) if t.value == "<" => {}
                            Some(t) => {
                                cx.fault(t.column, FaultCode::Syntax, "expected `<`");
                                continue;
                            }
                            None => continue,
                        }
                        let Some(after) = cx.ident(tokens.get(4), "class") else { continue };
                        if before == after {
                            cx.fault(tokens[4].column, FaultCode::Syntax, "precedence needs two different classes");
                            continue;
                        }
                        let mut scope = None;
                        if let Some(t) = tokens.get(5) {
                            let Some(t) = cx.keyed(Some(t), "scope") else { continue };
                            let block = match t.value.strip_prefix("module:") {
                                Some(b) if !t.quoted && is_identifier(b) => b,
                                _ => {
                                    cx.fault(t.column, FaultCode::Syntax, "scope must be module:<block-id>");
                                    continue;
                                }
                            };
                            if model.block(block).is_none() {
                                cx.fault(t.column, FaultCode::DanglingRef, format!("unknown block {block}"));
                                continue;
                            }
                            scope = Some(block.to_owned());
                            if cx.no_more(&tokens, 6).is_none() {
                                continue;
                            }
                        }
                        constraints.push(Constraint::Precedence { before, after, scope });
                    }
                    "verify" => {
                        let Some(observable) = cx.ident(tokens.get(2), "observable") else { continue };
                        let Some(comparator) = cx.comparator(tokens.get(3)) else { continue };
                        let Some(value) = cx.decimal::<S>(tokens.get(4)) else { continue };
                        let Some(after) = cx.keyed(tokens.get(5), "after") else { continue };
                        let Some(before) = cx.keyed(tokens.get(6), "before") else { continue };
                        if cx.no_more(&tokens, 7).is_none() {
                            continue;
                        }
                        if !is_identifier(&after.value) || !is_identifier(&before.value) {
                            cx.fault(after.column, FaultCode::Syntax, "classes must be identifiers");
                            continue;
                        }
                        if !model.observables.contains_key(&observable) {
                            cx.fault(tokens[2].column, FaultCode::DanglingRef, format!("unknown observable {observable}"));
                            continue;
                        }
                        constraints.push(Constraint::VerifyBetween {
                            observable,
                            comparator,
                            value,
                            after_class: after.value.clone(),
                            before_class: before.value.clone(),
                        });
                    }
                    other => cx.fault(kind.column, FaultCode::UnknownKeyword, format!("unknown constraint kind {other:?}")),
                }
            }
            "reverse_pair" => {
                let Some(off) = cx.ident(tokens.get(1), "class") else { continue };
                let Some(on) = cx.ident(tokens.get(2), "class") else { continue };
                if cx.no_more(&tokens, 3).is_none() {
                    continue;
                }
                if off == on {
                    cx.fault(tokens[2].column, FaultCode::Syntax, "reverse pair needs two different classes");
                    continue;
                }
                reverse_pairs.push((off, on));
            }
            "step" => {
                let Some(n_tok) = cx.bare(tokens.get(1), "step number") else { continue };
                let expected = steps.len() + 1;
                match n_tok.value.parse::<usize>() {
                    Ok(n) if n == expected => {}
                    _ => {
                        cx.fault(n_tok.column, FaultCode::Syntax, format!("expected step number {expected}, found {:?}", n_tok.value));
                        continue;
                    }
                }
                let instruction = match tokens.get(2) {
                    Some(t) if t.quoted && t.key.is_none() => t.value.clone(),
                    Some(t) => {
                        cx.fault(t.column, FaultCode::Syntax, "instruction must be a quoted string");
                        continue;
                    }
                    None => {
                        cx.fault(cx.end_column, FaultCode::Syntax, "missing instruction");
                        continue;
                    }
                };
                let Some(target_tok) = cx.keyed(tokens.get(3), "target") else { continue };
                let Some(class_tok) = cx.keyed(tokens.get(4), "class") else { continue };
                let Some(op_tok) = cx.keyed(tokens.get(5), "op") else { continue };
                if target_tok.quoted || !is_identifier(&target_tok.value) {
                    cx.fault(target_tok.column, FaultCode::Syntax, "target must be a block id");
                    continue;
                }
                if class_tok.quoted || !is_identifier(&class_tok.value) {
                    cx.fault(class_tok.column, FaultCode::Syntax, "class must be an identifier");
                    continue;
                }
                if model.block(&target_tok.value).is_none() {
                    cx.fault(target_tok.column, FaultCode::DanglingRef, format!("unknown block {}", target_tok.value));
                    continue;
                }
                let args = &tokens[6..];
                let op = match op_tok.value.as_str() {
                    "none" => {
                        if cx.no_more(&tokens, 6).is_none() {
                            continue;
                        }
                        None
                    }
                    verb @ ("connect" | "disconnect") => {
                        let Some(conn) = cx.ident(args.first(), "connection id") else { continue };
                        if cx.no_more(&tokens, 7).is_none() {
                            continue;
                        }
                        if model.connection(&conn).is_none() {
                            cx.fault(args[0].column, FaultCode::DanglingRef, format!("unknown connection {conn}"));
                            continue;
                        }
                        Some(if verb == "connect" { ModelOp::Connect(conn) } else { ModelOp::Disconnect(conn) })
                    }
                    "set" => {
                        let Some(name) = cx.ident(args.first(), "observable") else { continue };
                        let Some(value) = cx.decimal::<S>(args.get(1)) else { continue };
                        if cx.no_more(&tokens, 8).is_none() {
                            continue;
                        }
                        if !model.observables.contains_key(&name) {
                            cx.fault(args[0].column, FaultCode::DanglingRef, format!("unknown observable {name}"));
                            continue;
                        }
                        Some(ModelOp::SetObservable { name, value })
                    }
                    "verify" => {
                        let Some(name) = cx.ident(args.first(), "observable") else { continue };
                        let Some(comparator) = cx.comparator(args.get(1)) else { continue };
                        let Some(value) = cx.decimal::<S>(args.get(2)) else { continue };
                        if cx.no_more(&tokens, 9).is_none() {
                            continue;
                        }
                        if !model.observables.contains_key(&name) {
                            cx.fault(args[0].column, FaultCode::DanglingRef, format!("unknown observable {name}"));
                            continue;
                        }
                        Some(ModelOp::Verify { name, comparator, value })
                    }
                    other => {
                        cx.fault(op_tok.column, FaultCode::UnknownKeyword, format!("unknown op {other:?}"));
                        continue;
                    }
                };
                steps.push(Step {
                    index: expected,
                    instruction,
                    target: target_tok.value.clone(),
                    class: class_tok.value.clone(),
                    op,
                });
            }
            _ => cx.fault(first_column, FaultCode::UnknownKeyword, format!("unknown declaration {keyword:?}")),
        }
    }

    if !seen_decl {
        faults.push(1, 1, FaultCode::Syntax, "expected `lesson <id> model=<model-id>` header");
    }
    if !faults.is_empty() {
        return Err(faults.into_sorted());
    }
    let mut lesson = lesson.expect("header present when no faults");
    lesson.steps = steps;
    lesson.constraints = constraints;
    lesson.reverse_pairs = reverse_pairs;
    Ok(lesson)
}

/// Writes a lesson back in its own grammar: header, constraints, reverse
/// pairs, then steps in order.
pub fn serialize_lesson<S: Scalar>(lesson: &Lesson<S>) -> String {
    let mut out = format!("lesson {} model={}\n", lesson.id, lesson.model_id);
    for c in &lesson.constraints {
        out.push_str(&format!("constraint {c}\n"));
    }
    for (off, on) in &lesson.reverse_pairs {
        out.push_str(&format!("reverse_pair {off} {on}\n"));
    }
    for step in &lesson.steps {
        let op = step.op.as_ref().map_or_else(|| "none".to_owned(), ToString::to_string);
        out.push_str(&format!(
            "step {} {} target={} class={} op={op}\n",
            step.index,
            quote(&step.instruction),
            step.target,
            step.class
        ));
    }
    out
}
