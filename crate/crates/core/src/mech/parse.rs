//! Reader and canonical writer for the mechanism text format
//! (see `docs/mechanism-format.md`).

use super::{Element, MechError, Mechanism, Reaction, Result, SpeciesThermo, GAS_CONSTANT};

const CAL: f64 = 4.184;

fn default_atomic_weight(symbol: &str) -> Option<f64> {
    let w = match symbol.to_ascii_uppercase().as_str() {
        "H" => 1.008,
        "D" => 2.014,
        "HE" => 4.002602,
        "C" => 12.011,
        "N" => 14.007,
        "O" => 15.999,
        "F" => 18.998403163,
        "NE" => 20.1797,
        "S" => 32.06,
        "CL" => 35.45,
        "AR" => 39.948,
        "E" => 5.48579909e-4,
        _ => return None,
    };
    Some(w)
}

struct Line<'a> {
    no: usize,
    text: &'a str,
}

fn syntax(line: usize, col: usize, expected: impl Into<String>) -> MechError {
    MechError::Syntax {
        line,
        col,
        expected: expected.into(),
    }
}

fn strip_comment(s: &str) -> &str {
    match s.find('!') {
        Some(i) => &s[..i],
        None => s,
    }
}

/// Tokens with their 1-based starting column.
fn tokens(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c.is_whitespace() {
            if let Some(b) = start.take() {
                out.push((b + 1, &s[b..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(b) = start {
        out.push((b + 1, &s[b..]));
    }
    out
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Section {
    Elements,
    Species,
    Thermo,
    Reactions,
}

fn section_keyword(tok: &str) -> Option<Section> {
    let up = tok.to_ascii_uppercase();
    let is = |full: &str| up.len() >= 4 && full.starts_with(&up);
    if is("ELEMENTS") {
        Some(Section::Elements)
    } else if is("SPECIES") {
        Some(Section::Species)
    } else if is("THERMO") {
        Some(Section::Thermo)
    } else if is("REACTIONS") {
        Some(Section::Reactions)
    } else {
        None
    }
}

fn is_end(tok: &str) -> bool {
    tok.eq_ignore_ascii_case("END")
}

fn parse_f64(tok: &str, line: usize, col: usize, what: &str) -> Result<f64> {
    let t = tok.trim();
    // Fortran-style D exponents
    let normalized = t.replace(['D', 'd'], "E");
    normalized
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| syntax(line, col, what))
}

/// Parse a mechanism file. Deterministic; errors carry 1-based line/column.
pub fn parse_mechanism(text: &str) -> Result<Mechanism> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(i, l)| Line {
            no: i + 1,
            text: strip_comment(l).trim_end(),
        })
        .collect();

    let mut elements: Vec<Element> = Vec::new();
    let mut species_decl: Vec<(String, usize)> = Vec::new();
    let mut thermo_records: Vec<ThermoRecord> = Vec::new();
    let mut reaction_lines: Vec<RawReaction> = Vec::new();
    let mut units = Units::default();
    let mut seen_reactions = false;

    let mut i = 0;
    while i < lines.len() {
        let line = &lines[i];
        let toks = tokens(line.text);
        if toks.is_empty() {
            i += 1;
            continue;
        }
        let (col, head) = toks[0];
        let section = section_keyword(head).ok_or_else(|| {
            syntax(
                line.no,
                col,
                "a section keyword (ELEMENTS, SPECIES, THERMO or REACTIONS)",
            )
        })?;
        match section {
            Section::Elements | Section::Species => {
                let (items, next) = collect_list(&lines, i, &toks[1..])?;
                for (no, col, tok) in items {
                    if section == Section::Elements {
                        elements.push(parse_element(tok, no, col)?);
                    } else {
                        if species_decl
                            .iter()
                            .any(|(s, _)| s.eq_ignore_ascii_case(tok))
                        {
                            return Err(MechError::DuplicateSpecies {
                                name: tok.to_string(),
                            });
                        }
                        species_decl.push((tok.to_string(), no));
                    }
                }
                i = next;
            }
            Section::Thermo => {
                let (records, next) = parse_thermo_section(&lines, i, &toks[1..])?;
                thermo_records.extend(records);
                i = next;
            }
            Section::Reactions => {
                if seen_reactions {
                    return Err(syntax(line.no, col, "a single REACTIONS section"));
                }
                seen_reactions = true;
                units = Units::parse(&toks[1..], line.no)?;
                let (raw, next) = collect_reactions(&lines, i + 1)?;
                reaction_lines = raw;
                i = next;
            }
        }
    }

    if species_decl.is_empty() {
        return Err(syntax(
            lines.len().max(1),
            1,
            "a SPECIES section with at least one species",
        ));
    }

    let mut species = Vec::with_capacity(species_decl.len());
    let mut composition = Vec::with_capacity(species_decl.len());
    for (name, _) in &species_decl {
        let rec = thermo_records
            .iter()
            .find(|r| r.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| MechError::MissingThermo { name: name.clone() })?;
        let mut counts = vec![0u32; elements.len()];
        for (sym, n) in &rec.elements {
            let e = elements
                .iter()
                .position(|el| el.symbol.eq_ignore_ascii_case(sym))
                .ok_or_else(|| MechError::UnknownElement {
                    symbol: sym.clone(),
                    line: rec.line,
                })?;
            counts[e] += n;
        }
        let molar_mass: f64 = counts
            .iter()
            .zip(&elements)
            .map(|(&n, el)| f64::from(n) * el.atomic_weight)
            .sum();
        let sp = SpeciesThermo {
            name: name.clone(),
            molar_mass,
            t_low: rec.t_low,
            t_mid: rec.t_mid,
            t_high: rec.t_high,
            coeffs_low: rec.low,
            coeffs_high: rec.high,
        };
        validate_thermo(&sp)?;
        species.push(sp);
        composition.push(counts);
    }

    let mut reactions = Vec::with_capacity(reaction_lines.len());
    for (idx, raw) in reaction_lines.into_iter().enumerate() {
        let rxn = build_reaction(raw, &species, &units)?;
        check_balance(&rxn, idx + 1, &elements, &composition)?;
        reactions.push(rxn);
    }

    Ok(Mechanism {
        elements,
        species,
        reactions,
        composition,
    })
}

/// Tokens of a list section (ELEMENTS / SPECIES) up to its END.
fn collect_list<'a>(
    lines: &'a [Line<'a>],
    start: usize,
    first: &[(usize, &'a str)],
) -> Result<(Vec<(usize, usize, &'a str)>, usize)> {
    let mut out = Vec::new();
    let mut push = |no: usize, toks: &[(usize, &'a str)]| -> bool {
        for &(col, t) in toks {
            if is_end(t) {
                return true;
            }
            out.push((no, col, t));
        }
        false
    };
    if push(lines[start].no, first) {
        return Ok((out, start + 1));
    }
    let mut i = start + 1;
    while i < lines.len() {
        let toks = tokens(lines[i].text);
        if let Some(&(col, t)) = toks.first() {
            if section_keyword(t).is_some() {
                return Err(syntax(lines[i].no, col, "END"));
            }
        }
        if push(lines[i].no, &toks) {
            return Ok((out, i + 1));
        }
        i += 1;
    }
    Err(syntax(lines.last().map_or(1, |l| l.no), 1, "END"))
}

fn parse_element(tok: &str, line: usize, col: usize) -> Result<Element> {
    let (symbol, weight) = match tok.find('/') {
        Some(p) => {
            let rest = &tok[p + 1..];
            let w = rest
                .strip_suffix('/')
                .ok_or_else(|| syntax(line, col + p, "closing '/' after atomic weight"))?;
            (
                &tok[..p],
                Some(parse_f64(w, line, col + p + 1, "an atomic weight")?),
            )
        }
        None => (tok, None),
    };
    if symbol.is_empty() || !symbol.chars().all(|c| c.is_ascii_alphabetic()) {
        return Err(syntax(line, col, "an element symbol"));
    }
    let atomic_weight = match weight {
        Some(w) => w,
        None => default_atomic_weight(symbol).ok_or_else(|| MechError::UnknownElement {
            symbol: symbol.to_string(),
            line,
        })?,
    };
    if atomic_weight <= 0.0 {
        return Err(syntax(line, col, "a positive atomic weight"));
    }
    Ok(Element {
        symbol: symbol.to_ascii_uppercase(),
        atomic_weight,
    })
}

struct ThermoRecord {
    name: String,
    line: usize,
    elements: Vec<(String, u32)>,
    t_low: f64,
    t_mid: f64,
    t_high: f64,
    high: [f64; 7],
    low: [f64; 7],
}

fn field<'a>(line: &Line<'a>, from: usize, to: usize) -> &'a str {
    let b = line.text.as_bytes();
    let to = to.min(b.len());
    if from >= to {
        ""
    } else {
        // ASCII was checked by the caller
        &line.text[from..to]
    }
}

fn parse_thermo_section<'a>(
    lines: &'a [Line<'a>],
    start: usize,
    header: &[(usize, &'a str)],
) -> Result<(Vec<ThermoRecord>, usize)> {
    // THERMO [ALL]
    if header.len() > 1
        || header
            .first()
            .is_some_and(|(_, t)| !t.eq_ignore_ascii_case("ALL"))
    {
        let (col, _) = header[header.len() - 1];
        return Err(syntax(lines[start].no, col, "THERMO or THERMO ALL"));
    }
    let mut i = start + 1;
    let mut default_mid: Option<f64> = None;
    let mut out = Vec::new();
    let mut first = true;
    loop {
        // skip blank lines
        while i < lines.len() && lines[i].text.trim().is_empty() {
            i += 1;
        }
        if i >= lines.len() {
            return Err(syntax(
                lines.last().map_or(1, |l| l.no),
                1,
                "END of THERMO section",
            ));
        }
        let line = &lines[i];
        if !line.text.is_ascii() {
            return Err(syntax(line.no, 1, "ASCII thermo record"));
        }
        let toks = tokens(line.text);
        if is_end(toks[0].1) && toks.len() == 1 {
            return Ok((out, i + 1));
        }
        if first {
            first = false;
            if toks.len() == 3 {
                let nums: Option<Vec<f64>> = toks.iter().map(|(_, t)| t.parse().ok()).collect();
                if let Some(n) = nums {
                    default_mid = Some(n[1]);
                    i += 1;
                    continue;
                }
            }
        }
        // a 4-line record
        let mut rec_lines = Vec::with_capacity(4);
        let mut j = i;
        while rec_lines.len() < 4 {
            if j >= lines.len() {
                return Err(syntax(lines[i].no, 1, "four-line NASA-7 record"));
            }
            if !lines[j].text.trim().is_empty() {
                if !lines[j].text.is_ascii() {
                    return Err(syntax(lines[j].no, 1, "ASCII thermo record"));
                }
                rec_lines.push(&lines[j]);
            }
            j += 1;
        }
        out.push(parse_record(&rec_lines, default_mid)?);
        i = j;
    }
}

fn parse_record(rec: &[&Line], default_mid: Option<f64>) -> Result<ThermoRecord> {
    let l1 = rec[0];
    for (k, l) in rec.iter().enumerate() {
        let marker = field(l, 79, 80).trim();
        if !marker.is_empty() && marker != (k + 1).to_string() {
            return Err(syntax(l.no, 80, format!("record line number {}", k + 1)));
        }
    }
    let name = field(l1, 0, 18)
        .split_whitespace()
        .next()
        .ok_or_else(|| syntax(l1.no, 1, "species name in columns 1-18"))?
        .to_string();
    let mut elements = Vec::new();
    for f in 0..4 {
        let from = 24 + 5 * f;
        let sym = field(l1, from, from + 2).trim();
        let cnt = field(l1, from + 2, from + 5).trim();
        if sym.is_empty() {
            continue;
        }
        let n = parse_f64(cnt, l1.no, from + 3, "element count")?;
        if n < 0.0 || n.fract() != 0.0 {
            return Err(syntax(
                l1.no,
                from + 3,
                "a non-negative integer element count",
            ));
        }
        if n > 0.0 {
            elements.push((sym.to_ascii_uppercase(), n as u32));
        }
    }
    let t_low = parse_f64(field(l1, 45, 55), l1.no, 46, "T_low in columns 46-55")?;
    let t_high = parse_f64(field(l1, 55, 65), l1.no, 56, "T_high in columns 56-65")?;
    let mid_field = field(l1, 65, 73).trim();
    let t_mid = if mid_field.is_empty() {
        default_mid.ok_or_else(|| syntax(l1.no, 66, "T_mid in columns 66-73"))?
    } else {
        parse_f64(mid_field, l1.no, 66, "T_mid in columns 66-73")?
    };
    let mut c = [0.0; 14];
    for (k, l) in rec[1..].iter().enumerate() {
        let n = if k == 2 { 4 } else { 5 };
        for f in 0..n {
            let from = 15 * f;
            c[5 * k + f] = parse_f64(
                field(l, from, from + 15),
                l.no,
                from + 1,
                "a 15-column NASA-7 coefficient",
            )?;
        }
    }
    let mut high = [0.0; 7];
    let mut low = [0.0; 7];
    high.copy_from_slice(&c[0..7]);
    low.copy_from_slice(&c[7..14]);
    Ok(ThermoRecord {
        name,
        line: l1.no,
        elements,
        t_low,
        t_mid,
        t_high,
        high,
        low,
    })
}

fn validate_thermo(sp: &SpeciesThermo) -> Result<()> {
    let bad = |reason: String| MechError::InvalidThermo {
        name: sp.name.clone(),
        reason,
    };
    if !(sp.t_low < sp.t_mid && sp.t_mid < sp.t_high) {
        return Err(bad(format!(
            "temperature bounds {} < {} < {} violated",
            sp.t_low, sp.t_mid, sp.t_high
        )));
    }
    if !(sp.molar_mass > 0.0) {
        return Err(bad("molar mass must be positive".into()));
    }
    let lo = sp.cp_molar_branch(sp.t_mid, false);
    let hi = sp.cp_molar_branch(sp.t_mid, true);
    if !(lo > 0.0 && hi > 0.0) || (lo - hi).abs() > 0.01 * lo.abs().max(hi.abs()) {
        return Err(bad(format!(
            "cp discontinuous at T_mid = {}: {lo} vs {hi} J/(kmol K)",
            sp.t_mid
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Units {
    /// multiply Ea by this to get J/kmol
    energy: f64,
    /// concentration unit of A: true for kmol/m³ (SI), false for mol/cm³
    si_amount: bool,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            energy: CAL * 1000.0,
            si_amount: false,
        }
    }
}

impl Units {
    fn parse(toks: &[(usize, &str)], line: usize) -> Result<Units> {
        let mut u = Units::default();
        for &(col, t) in toks {
            match t.to_ascii_uppercase().as_str() {
                "CAL/MOLE" => u.energy = CAL * 1000.0,
                "KCAL/MOLE" => u.energy = CAL * 1.0e6,
                "JOULES/MOLE" => u.energy = 1000.0,
                "KJOULES/MOLE" => u.energy = 1.0e6,
                "JOULES/KMOLE" => u.energy = 1.0,
                "KELVINS" => u.energy = GAS_CONSTANT,
                "MOLES" => u.si_amount = false,
                "KMOLES" => u.si_amount = true,
                _ => {
                    return Err(syntax(
                        line,
                        col,
                        "a units keyword (CAL/MOLE, KCAL/MOLE, JOULES/MOLE, KJOULES/MOLE, JOULES/KMOLE, KELVINS, MOLES, KMOLES)",
                    ))
                }
            }
        }
        Ok(u)
    }
}

struct RawReaction {
    line: usize,
    reactants: Vec<(String, u32, usize)>,
    products: Vec<(String, u32, usize)>,
    reversible: bool,
    a: f64,
    b: f64,
    ea: f64,
    orders: Vec<(String, f64, usize, usize)>,
}

fn collect_reactions(lines: &[Line], start: usize) -> Result<(Vec<RawReaction>, usize)> {
    let mut out: Vec<RawReaction> = Vec::new();
    let mut i = start;
    while i < lines.len() {
        let line = &lines[i];
        let toks = tokens(line.text);
        i += 1;
        if toks.is_empty() {
            continue;
        }
        if toks.len() == 1 && is_end(toks[0].1) {
            return Ok((out, i));
        }
        if line.text.contains('=') {
            out.push(parse_reaction_line(line, &toks)?);
        } else {
            let last = out
                .last_mut()
                .ok_or_else(|| syntax(line.no, toks[0].0, "a reaction equation"))?;
            parse_auxiliary(line, last)?;
        }
    }
    Err(syntax(
        lines.last().map_or(1, |l| l.no),
        1,
        "END of REACTIONS section",
    ))
}

fn parse_reaction_line(line: &Line, toks: &[(usize, &str)]) -> Result<RawReaction> {
    if toks.len() < 4 {
        return Err(syntax(
            line.no,
            toks[0].0,
            "equation followed by A, b and Ea",
        ));
    }
    let n = toks.len();
    let a = parse_f64(
        toks[n - 3].1,
        line.no,
        toks[n - 3].0,
        "pre-exponential factor A",
    )?;
    let b = parse_f64(
        toks[n - 2].1,
        line.no,
        toks[n - 2].0,
        "temperature exponent b",
    )?;
    let ea = parse_f64(
        toks[n - 1].1,
        line.no,
        toks[n - 1].0,
        "activation energy Ea",
    )?;
    if !(a > 0.0) {
        return Err(syntax(
            line.no,
            toks[n - 3].0,
            "a positive pre-exponential factor",
        ));
    }
    let eq_start = toks[0].0 - 1;
    let eq_end = toks[n - 3].0 - 1;
    let equation = &line.text[eq_start..eq_end];
    let (lhs, rhs, reversible, op_col) = if let Some(p) = equation.find("<=>") {
        (&equation[..p], &equation[p + 3..], true, p)
    } else if let Some(p) = equation.find("=>") {
        (&equation[..p], &equation[p + 2..], false, p)
    } else if let Some(p) = equation.find('=') {
        (&equation[..p], &equation[p + 1..], true, p)
    } else {
        return Err(syntax(line.no, toks[0].0, "'=>', '<=>' or '='"));
    };
    let rhs_offset = eq_start
        + op_col
        + if reversible && equation[op_col..].starts_with("<=>") {
            3
        } else if reversible {
            1
        } else {
            2
        };
    if rhs.contains('=') {
        return Err(syntax(line.no, rhs_offset + 1, "a single reaction arrow"));
    }
    let reactants = parse_side(lhs, line.no, eq_start)?;
    let products = parse_side(rhs, line.no, rhs_offset)?;
    Ok(RawReaction {
        line: line.no,
        reactants,
        products,
        reversible,
        a,
        b,
        ea,
        orders: Vec::new(),
    })
}

fn parse_side(side: &str, line: usize, offset: usize) -> Result<Vec<(String, u32, usize)>> {
    let mut out: Vec<(String, u32, usize)> = Vec::new();
    let mut pos = 0;
    for term in side.split('+') {
        let col = offset + pos + (term.len() - term.trim_start().len()) + 1;
        pos += term.len() + 1;
        let term = term.trim();
        if term.is_empty() {
            return Err(syntax(line, col, "a species term"));
        }
        if term.eq_ignore_ascii_case("M") || term.starts_with('(') || term.contains("(+") {
            return Err(syntax(
                line,
                col,
                "a species (third-body and falloff reactions are not supported)",
            ));
        }
        if term.contains(char::is_whitespace) {
            return Err(syntax(line, col, "'+' between species"));
        }
        let digits = term.chars().take_while(|c| c.is_ascii_digit()).count();
        let (coef, name) = if digits > 0
            && digits < term.len()
            && term[digits..].starts_with(|c: char| c.is_ascii_alphabetic())
        {
            let c: u32 = term[..digits]
                .parse()
                .map_err(|_| syntax(line, col, "an integer stoichiometric coefficient"))?;
            if c == 0 {
                return Err(syntax(line, col, "a positive stoichiometric coefficient"));
            }
            (c, &term[digits..])
        } else {
            (1, term)
        };
        match out
            .iter_mut()
            .find(|(n, _, _)| n.eq_ignore_ascii_case(name))
        {
            Some(entry) => entry.1 += coef,
            None => out.push((name.to_string(), coef, col)),
        }
    }
    Ok(out)
}

fn parse_auxiliary(line: &Line, rxn: &mut RawReaction) -> Result<()> {
    // KEYWORD /args/ KEYWORD /args/ ...
    let text = line.text;
    let mut rest = text;
    let mut consumed = 0;
    loop {
        let trimmed = rest.trim_start();
        consumed += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            return Ok(());
        }
        let col = consumed + 1;
        let kw_len = trimmed
            .find(|c: char| c == '/' || c.is_whitespace())
            .unwrap_or(trimmed.len());
        let kw = &trimmed[..kw_len];
        if !kw.eq_ignore_ascii_case("FORD") {
            return Err(syntax(
                line.no,
                col,
                "FORD (other auxiliary keywords are not supported)",
            ));
        }
        let after = &trimmed[kw_len..];
        let open = after
            .find('/')
            .filter(|&p| after[..p].trim().is_empty())
            .ok_or_else(|| syntax(line.no, col + kw_len, "'/' after FORD"))?;
        let body_start = open + 1;
        let close = after[body_start..]
            .find('/')
            .ok_or_else(|| syntax(line.no, col + kw_len + body_start, "closing '/'"))?;
        let body = &after[body_start..body_start + close];
        let arg_col = col + kw_len + body_start + 1;
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(syntax(line.no, arg_col, "FORD /species order/"));
        }
        let order = parse_f64(parts[1], line.no, arg_col, "a reaction order")?;
        rxn.orders
            .push((parts[0].to_string(), order, line.no, arg_col));
        let used = kw_len + body_start + close + 1;
        consumed += used;
        rest = &trimmed[used..];
    }
}

fn build_reaction(raw: RawReaction, species: &[SpeciesThermo], units: &Units) -> Result<Reaction> {
    let lookup = |name: &str, line: usize| {
        species
            .iter()
            .position(|s| s.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| MechError::UnknownSpecies {
                name: name.to_string(),
                line,
            })
    };
    let mut reactants = Vec::with_capacity(raw.reactants.len());
    for (name, nu, _) in &raw.reactants {
        reactants.push((lookup(name, raw.line)?, *nu));
    }
    let mut products = Vec::with_capacity(raw.products.len());
    for (name, nu, _) in &raw.products {
        products.push((lookup(name, raw.line)?, *nu));
    }
    let mut orders = Vec::with_capacity(raw.orders.len());
    for (name, order, line, col) in &raw.orders {
        if raw.reversible {
            return Err(syntax(
                *line,
                *col,
                "FORD only on irreversible ('=>') reactions",
            ));
        }
        if *order < 0.0 {
            return Err(syntax(*line, *col, "a non-negative reaction order"));
        }
        let k = lookup(name, *line)?;
        if orders.iter().any(|(j, _)| *j == k) {
            return Err(syntax(*line, *col, "at most one FORD per species"));
        }
        orders.push((k, *order));
    }
    let mut rxn = Reaction {
        reactants,
        products,
        orders,
        arrhenius_a: raw.a,
        arrhenius_b: raw.b,
        activation_energy: raw.ea * units.energy,
        reversible: raw.reversible,
    };
    if !units.si_amount {
        // mol/cm³ -> kmol/m³: A_SI = A_cgs * 1000^(1 - order)
        let order = rxn.total_order();
        rxn.arrhenius_a *= 1000f64.powf(1.0 - order);
    }
    Ok(rxn)
}

fn check_balance(
    rxn: &Reaction,
    index: usize,
    elements: &[Element],
    composition: &[Vec<u32>],
) -> Result<()> {
    for (e, el) in elements.iter().enumerate() {
        let mut net: i64 = 0;
        for &(k, nu) in &rxn.products {
            net += i64::from(nu) * i64::from(composition[k][e]);
        }
        for &(k, nu) in &rxn.reactants {
            net -= i64::from(nu) * i64::from(composition[k][e]);
        }
        if net != 0 {
            return Err(MechError::ElementImbalance {
                reaction: index,
                element: el.symbol.clone(),
            });
        }
    }
    Ok(())
}

/// `%15.8E` with a two-digit signed exponent, as in Chemkin thermo files.
fn fortran_e(x: f64) -> String {
    let s = format!("{x:.8E}");
    let (mant, exp) = s.split_once('E').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{:>15}", format!("{mant}E{sign}{:02}", exp.abs()))
}

fn pad_line(mut s: String, marker: char) -> String {
    while s.len() < 79 {
        s.push(' ');
    }
    s.push(marker);
    s
}

fn format_term(mech: &Mechanism, k: usize, nu: u32) -> String {
    if nu == 1 {
        mech.species[k].name.clone()
    } else {
        format!("{nu}{}", mech.species[k].name)
    }
}

pub(super) fn serialize(mech: &Mechanism) -> String {
    let mut out = String::new();
    out.push_str("ELEMENTS\n");
    for el in &mech.elements {
        out.push_str(&format!("{}/{}/\n", el.symbol, el.atomic_weight));
    }
    out.push_str("END\nSPECIES\n");
    for sp in &mech.species {
        out.push_str(&sp.name);
        out.push('\n');
    }
    out.push_str("END\nTHERMO\n");
    for (sp, counts) in mech.species.iter().zip(&mech.composition) {
        let mut els = String::new();
        for (n, el) in counts.iter().zip(&mech.elements).filter(|(n, _)| **n > 0) {
            els.push_str(&format!("{:<2}{:>3}", el.symbol, n));
        }
        let l1 = format!(
            "{:<18}{:<6}{:<20}G{:>10.3}{:>10.3}{:>8.2}",
            sp.name, "", els, sp.t_low, sp.t_high, sp.t_mid
        );
        out.push_str(&pad_line(l1, '1'));
        out.push('\n');
        let c: Vec<f64> = sp
            .coeffs_high
            .iter()
            .chain(&sp.coeffs_low)
            .copied()
            .collect();
        for (k, chunk) in c.chunks(5).enumerate() {
            let l: String = chunk.iter().map(|&x| fortran_e(x)).collect();
            out.push_str(&pad_line(l, char::from(b'2' + k as u8)));
            out.push('\n');
        }
    }
    out.push_str("END\nREACTIONS  KMOLES  JOULES/KMOLE\n");
    for rxn in &mech.reactions {
        let lhs: Vec<String> = rxn
            .reactants
            .iter()
            .map(|&(k, n)| format_term(mech, k, n))
            .collect();
        let rhs: Vec<String> = rxn
            .products
            .iter()
            .map(|&(k, n)| format_term(mech, k, n))
            .collect();
        let arrow = if rxn.reversible { "<=>" } else { "=>" };
        out.push_str(&format!(
            "{} {arrow} {}  {:e}  {:e}  {:e}\n",
            lhs.join(" + "),
            rhs.join(" + "),
            rxn.arrhenius_a,
            rxn.arrhenius_b,
            rxn.activation_energy
        ));
        if !rxn.orders.is_empty() {
            let fords: Vec<String> = rxn
                .orders
                .iter()
                .map(|&(k, o)| format!("FORD /{} {:e}/", mech.species[k].name, o))
                .collect();
            out.push_str("    ");
            out.push_str(&fords.join("  "));
            out.push('\n');
        }
    }
    out.push_str("END\n");
    out
}
