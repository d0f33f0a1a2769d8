//! A synthetic furniture catalog and a random PAG generator over it, used for
//! property suites and demos.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::catalog::{Asset, AssetCatalog, Part};
use crate::geom3d::{FaceLabel, Vec3};
use crate::pag::{ObjectEdge, ObjectNode, ObjectRelation, PartEdge, PartNodeRef, PartRelation, Query, Room};
use crate::pag::{Pag, SCHEMA_VERSION};

fn part(name: &str, min: [f64; 3], max: [f64; 3]) -> Part {
    Part::boxed(name, Vec3::from(min), Vec3::from(max))
}

fn asset(id: &str, category: &str, parts: Vec<Part>) -> Asset {
    Asset::canonicalize(id, category, parts).expect("synthetic assets are well formed")
}

/// Slab on four corner legs.
fn table(id: &str, category: &str, w: f64, d: f64, h: f64) -> Asset {
    let (t, l) = (0.04, 0.05);
    let (x, y) = (w / 2.0, d / 2.0);
    let leg = |name: &str, sx: f64, sy: f64| {
        let cx = sx * (x - l);
        let cy = sy * (y - l);
        part(name, [cx - l / 2.0, cy - l / 2.0, 0.0], [cx + l / 2.0, cy + l / 2.0, h - t])
    };
    asset(
        id,
        category,
        vec![
            part("top", [-x, -y, h - t], [x, y, h]),
            leg("leg_front_left", -1.0, 1.0),
            leg("leg_front_right", 1.0, 1.0),
            leg("leg_back_left", -1.0, -1.0),
            leg("leg_back_right", 1.0, -1.0),
        ],
    )
}

/// Top on two side panels.
fn desk(id: &str, w: f64, d: f64, h: f64) -> Asset {
    let (t, s) = (0.04, 0.04);
    let (x, y) = (w / 2.0, d / 2.0);
    asset(
        id,
        "desk",
        vec![
            part("top", [-x, -y, h - t], [x, y, h]),
            part("side_left", [-x, -y, 0.0], [-x + s, y, h - t]),
            part("side_right", [x - s, -y, 0.0], [x, y, h - t]),
        ],
    )
}

/// Open-top box with a floor and four walls.
fn open_box(id: &str, category: &str, w: f64, d: f64, h: f64, t: f64) -> Asset {
    let (x, y) = (w / 2.0, d / 2.0);
    asset(
        id,
        category,
        vec![
            part("bottom", [-x, -y, 0.0], [x, y, t]),
            part("front_panel", [-x + t, y - t, t], [x - t, y, h]),
            part("back_panel", [-x + t, -y, t], [x - t, -y + t, h]),
            part("left_panel", [-x, -y, t], [-x + t, y, h]),
            part("right_panel", [x - t, -y, t], [x, y, h]),
        ],
    )
}

/// Open-front shelf unit with one middle board.
fn bookshelf(id: &str, w: f64, d: f64, h: f64) -> Asset {
    let t = 0.025;
    let (x, y) = (w / 2.0, d / 2.0);
    let mid = h / 2.0;
    asset(
        id,
        "bookshelf",
        vec![
            part("bottom", [-x + t, -y + t, 0.0], [x - t, y, t]),
            part("shelf", [-x + t, -y + t, mid - t / 2.0], [x - t, y, mid + t / 2.0]),
            part("top_board", [-x + t, -y + t, h - t], [x - t, y, h]),
            part("left_panel", [-x, -y, 0.0], [-x + t, y, h]),
            part("right_panel", [x - t, -y, 0.0], [x, y, h]),
            part("back_panel", [-x + t, -y, 0.0], [x - t, -y + t, h]),
        ],
    )
}

fn block(id: &str, category: &str, name: &str, w: f64, d: f64, h: f64) -> Asset {
    asset(id, category, vec![part(name, [-w / 2.0, -d / 2.0, 0.0], [w / 2.0, d / 2.0, h])])
}

fn chair(id: &str, w: f64, seat: f64, h: f64) -> Asset {
    let (x, y, l) = (w / 2.0, w / 2.0, 0.04);
    asset(
        id,
        "chair",
        vec![
            part("seat", [-x, -y, seat - 0.05], [x, y, seat]),
            part("backrest", [-x, -y, seat], [x, -y + 0.05, h]),
            part("legs", [-x + l, -y + l, 0.0], [x - l, y - l, seat - 0.05]),
        ],
    )
}

fn sofa(id: &str, w: f64, d: f64) -> Asset {
    let (x, y) = (w / 2.0, d / 2.0);
    asset(
        id,
        "sofa",
        vec![
            part("base", [-x + 0.15, -y + 0.2, 0.0], [x - 0.15, y, 0.45]),
            part("backrest", [-x + 0.15, -y, 0.0], [x - 0.15, -y + 0.2, 0.85]),
            part("arm_left", [-x, -y, 0.0], [-x + 0.15, y, 0.6]),
            part("arm_right", [x - 0.15, -y, 0.0], [x, y, 0.6]),
        ],
    )
}

fn bed(id: &str, w: f64, d: f64) -> Asset {
    let (x, y) = (w / 2.0, d / 2.0);
    asset(
        id,
        "bed",
        vec![
            part("frame", [-x, -y + 0.08, 0.0], [x, y, 0.3]),
            part("mattress", [-x + 0.03, -y + 0.1, 0.3], [x - 0.03, y - 0.02, 0.5]),
            part("headboard", [-x, -y, 0.0], [x, -y + 0.08, 1.0]),
        ],
    )
}

fn mug(id: &str, r: f64, h: f64) -> Asset {
    asset(
        id,
        "mug",
        vec![
            part("body", [-r, -r, 0.0], [r, r, h]),
            part("handle", [r, -0.01, 0.2 * h], [r + 0.03, 0.01, 0.8 * h]),
        ],
    )
}

/// Standing book: page block behind a front cover board.
fn book(id: &str, w: f64, d: f64, h: f64) -> Asset {
    let c = 0.004;
    let (x, y) = (w / 2.0, d / 2.0);
    asset(
        id,
        "book",
        vec![
            part("pages", [-x, -y, 0.0], [x, y - c, h]),
            part("cover", [-x, y - c, 0.0], [x, y, h]),
        ],
    )
}

fn lamp(id: &str, base: f64, h: f64, shade: f64) -> Asset {
    asset(
        id,
        "lamp",
        vec![
            part("base", [-base, -base, 0.0], [base, base, 0.03]),
            part("pole", [-0.01, -0.01, 0.03], [0.01, 0.01, h - 0.2]),
            part("shade", [-shade, -shade, h - 0.2], [shade, shade, h]),
        ],
    )
}

fn guitar(id: &str) -> Asset {
    asset(
        id,
        "guitar",
        vec![
            part("body", [-0.19, -0.05, 0.0], [0.19, 0.05, 0.5]),
            part("neck", [-0.03, -0.02, 0.5], [0.03, 0.02, 0.95]),
            part("head", [-0.045, -0.02, 0.95], [0.045, 0.02, 1.05]),
        ],
    )
}

/// Flat framed panel standing on its lower edge, facing +Y.
fn framed(id: &str, category: &str, w: f64, h: f64) -> Asset {
    let (x, d) = (w / 2.0, 0.03);
    asset(
        id,
        category,
        vec![
            part("frame", [-x, -d / 2.0, 0.0], [x, d / 2.0 - 0.005, h]),
            part("surface", [-x + 0.03, d / 2.0 - 0.005, 0.03], [x - 0.03, d / 2.0, h - 0.03]),
        ],
    )
}

fn laptop(id: &str) -> Asset {
    asset(
        id,
        "laptop",
        vec![
            part("base", [-0.17, -0.12, 0.0], [0.17, 0.12, 0.02]),
            part("screen", [-0.17, -0.12, 0.02], [0.17, -0.1, 0.24]),
        ],
    )
}

fn plant(id: &str, pot: f64, h: f64) -> Asset {
    asset(
        id,
        "plant",
        vec![
            part("pot", [-pot, -pot, 0.0], [pot, pot, 0.6 * pot + 0.1]),
            part("foliage", [-1.4 * pot, -1.4 * pot, 0.6 * pot + 0.1], [1.4 * pot, 1.4 * pot, h]),
        ],
    )
}

fn tv(id: &str) -> Asset {
    asset(
        id,
        "tv",
        vec![
            part("stand", [-0.12, -0.1, 0.0], [0.12, 0.1, 0.05]),
            part("screen", [-0.45, -0.03, 0.05], [0.45, 0.03, 0.6]),
        ],
    )
}

fn bowl(id: &str, w: f64, h: f64) -> Asset {
    open_box(id, "bowl", w, w, h, 0.008)
}

/// The 40-asset synthetic catalog. Part names are shared within a category so
/// that generated graphs can name parts without knowing the retrieved asset.
pub fn catalog() -> AssetCatalog {
    let assets = vec![
        table("table_dining", "table", 1.4, 0.9, 0.75),
        table("table_square", "table", 0.9, 0.9, 0.74),
        table("table_long", "table", 1.8, 0.8, 0.76),
        desk("desk_office", 1.2, 0.6, 0.74),
        desk("desk_compact", 1.0, 0.55, 0.72),
        table("coffee_table_low", "coffee_table", 1.0, 0.55, 0.42),
        table("coffee_table_round", "coffee_table", 0.8, 0.8, 0.45),
        bookshelf("bookshelf_wide", 0.9, 0.35, 1.0),
        bookshelf("bookshelf_narrow", 0.7, 0.32, 1.1),
        block("cabinet_tall", "cabinet", "body", 0.8, 0.45, 1.1),
        block("cabinet_low", "cabinet", "body", 1.0, 0.45, 0.8),
        open_box("crate_medium", "crate", 0.6, 0.45, 0.4, 0.02),
        open_box("crate_small", "crate", 0.5, 0.4, 0.35, 0.02),
        open_box("crate_large", "crate", 0.7, 0.5, 0.45, 0.02),
        chair("chair_dining", 0.45, 0.46, 0.9),
        chair("chair_stool", 0.4, 0.5, 0.75),
        sofa("sofa_two_seat", 1.6, 0.85),
        sofa("sofa_three_seat", 2.1, 0.9),
        bed("bed_single", 1.0, 2.0),
        block("nightstand_box", "nightstand", "body", 0.45, 0.4, 0.55),
        block("nightstand_slim", "nightstand", "body", 0.4, 0.35, 0.6),
        mug("mug_classic", 0.04, 0.1),
        mug("mug_tall", 0.035, 0.13),
        book("book_novel", 0.14, 0.03, 0.21),
        book("book_large", 0.2, 0.035, 0.27),
        book("book_thin", 0.15, 0.015, 0.22),
        bowl("bowl_wide", 0.22, 0.08),
        bowl("bowl_small", 0.15, 0.06),
        block("vase_tall", "vase", "body", 0.12, 0.12, 0.3),
        lamp("lamp_desk", 0.08, 0.45, 0.12),
        lamp("lamp_reading", 0.07, 0.38, 0.1),
        laptop("laptop_13"),
        plant("plant_small", 0.08, 0.35),
        guitar("guitar_acoustic"),
        framed("painting_landscape", "painting", 0.8, 0.6),
        framed("painting_portrait", "painting", 0.5, 0.7),
        framed("mirror_floor", "mirror", 0.5, 1.4),
        block("box_shoe", "box", "body", 0.3, 0.18, 0.12),
        block("box_gift", "box", "body", 0.2, 0.2, 0.15),
        tv("tv_flat"),
    ];
    let synonyms = [
        ("cup", "mug"),
        ("couch", "sofa"),
        ("sofa_bed", "sofa"),
        ("shelf", "bookshelf"),
        ("bin", "crate"),
        ("picture", "painting"),
        ("dresser", "cabinet"),
        ("television", "tv"),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    AssetCatalog::new(assets, synonyms).expect("synthetic catalog is consistent")
}

/// Furniture with a flat top slab named `top`.
const SURFACES: [&str; 3] = ["table", "desk", "coffee_table"];
/// Containers with a `back_panel` part.
const CONTAINERS: [&str; 2] = ["crate", "bookshelf"];
const FLOOR_ITEMS: [&str; 6] = ["chair", "sofa", "cabinet", "nightstand", "plant", "bed"];
const TABLETOP_ITEMS: [&str; 8] = ["mug", "book", "bowl", "vase", "lamp", "laptop", "box", "plant"];
const CONTAINED_ITEMS: [&str; 2] = ["mug", "book"];
const LEANING_ITEMS: [&str; 3] = ["guitar", "painting", "mirror"];

/// Inner faces of the room walls.
const WALLS: [(&str, FaceLabel); 4] = [
    ("wall_north", FaceLabel::Back),
    ("wall_south", FaceLabel::Front),
    ("wall_west", FaceLabel::Right),
    ("wall_east", FaceLabel::Left),
];

struct Builder {
    pag: Pag,
    counts: BTreeMap<String, usize>,
}

impl Builder {
    fn add(&mut self, category: &str, supporter: &str) -> String {
        let n = self.counts.entry(category.to_string()).or_insert(0);
        *n += 1;
        let id = format!("{category}_{n}");
        self.pag.objects.push(ObjectNode {
            id: id.clone(),
            query: Query::One(category.to_string()),
            supporter: Some(supporter.to_string()),
        });
        id
    }

    fn rel(&mut self, source: &str, target: &str, relation: ObjectRelation) {
        self.pag.object_edges.push(ObjectEdge {
            source: source.to_string(),
            target: target.to_string(),
            relation,
        });
    }

    fn part_edge(&mut self, source: PartNodeRef, target: PartNodeRef, relation: PartRelation, support: bool) {
        self.pag.part_edges.push(PartEdge {
            source,
            target,
            relation,
            support_flag: support,
        });
    }

    fn wall_lean(&mut self, id: &str, root: &str, wall: usize) {
        let (part, face) = WALLS[wall];
        self.part_edge(
            PartNodeRef::object(id),
            PartNodeRef::face(root, part, face),
            PartRelation::Against,
            false,
        );
    }
}

const LATERAL: [ObjectRelation; 2] = [ObjectRelation::LeftOf, ObjectRelation::RightOf];
const DEPTH: [ObjectRelation; 2] = [ObjectRelation::Behind, ObjectRelation::InFrontOf];

/// Random valid PAG with `n` objects besides the room root (`5 <= n <= 15`).
/// Every graph uses all five object relations and all four part relations.
pub fn random_pag<R: Rng + ?Sized>(rng: &mut R, id: &str, n: usize) -> Pag {
    assert!((5..=15).contains(&n), "object count must lie in 5..=15");
    let root = "floor";
    let mut b = Builder {
        pag: Pag {
            schema_version: SCHEMA_VERSION,
            id: id.to_string(),
            root: root.to_string(),
            room: Room::default(),
            objects: vec![ObjectNode {
                id: root.to_string(),
                query: Query::One("floor".into()),
                supporter: None,
            }],
            object_edges: Vec::new(),
            part_edges: Vec::new(),
        },
        counts: BTreeMap::new(),
    };

    // Core: a surface on the floor, a container aligned with it, an item in
    // the container and a leaning item against a wall.
    let surface = b.add(SURFACES.choose(rng).unwrap(), root);
    let floor_ref = if rng.gen_bool(0.5) {
        PartNodeRef::face(root, crate::solver::FLOOR_PART, FaceLabel::Top)
    } else {
        PartNodeRef::object(root)
    };
    b.part_edge(PartNodeRef::object(&surface), floor_ref, PartRelation::On, true);

    let container = b.add(CONTAINERS.choose(rng).unwrap(), root);
    b.part_edge(
        PartNodeRef::face(&container, "back_panel", FaceLabel::Back),
        PartNodeRef::face(&surface, "top", FaceLabel::Back),
        PartRelation::AlignedWith,
        false,
    );
    let lateral = *LATERAL.choose(rng).unwrap();
    b.rel(&container, &surface, lateral);
    b.rel(&container, &surface, ObjectRelation::Near);

    let item = b.add(CONTAINED_ITEMS.choose(rng).unwrap(), &container);
    b.part_edge(PartNodeRef::object(&item), PartNodeRef::object(&container), PartRelation::In, true);
    let other = if lateral == ObjectRelation::LeftOf { ObjectRelation::RightOf } else { ObjectRelation::LeftOf };
    b.rel(&item, &container, ObjectRelation::InFrontOf);
    b.rel(&item, &container, other);

    let leaning = b.add(LEANING_ITEMS.choose(rng).unwrap(), root);
    b.wall_lean(&leaning, root, rng.gen_range(0..WALLS.len()));
    b.rel(&leaning, &surface, ObjectRelation::Behind);

    let mut surfaces = vec![surface];
    let mut containers = vec![container];
    let mut floor_objects = surfaces.clone();
    floor_objects.extend(containers.iter().cloned());
    let mut walls_used = 1;

    while b.pag.objects.len() < n + 1 {
        match rng.gen_range(0..10) {
            // Item on a surface, explicit, inferred or implicit.
            0..=3 => {
                let s = surfaces.choose(rng).unwrap().clone();
                let cat = *TABLETOP_ITEMS.choose(rng).unwrap();
                let id = b.add(cat, &s);
                match rng.gen_range(0..3) {
                    0 if cat == "book" => b.part_edge(
                        PartNodeRef::face(&id, "cover", FaceLabel::Front),
                        PartNodeRef::face(&s, "top", FaceLabel::Top),
                        PartRelation::On,
                        true,
                    ),
                    0 | 1 => b.part_edge(PartNodeRef::object(&id), PartNodeRef::object(&s), PartRelation::On, true),
                    _ => {}
                }
                if rng.gen_bool(0.3) {
                    b.rel(&id, &s, *[LATERAL, DEPTH].concat().choose(rng).unwrap());
                }
            }
            // Item in a container.
            4 => {
                let c = containers.choose(rng).unwrap().clone();
                let id = b.add(CONTAINED_ITEMS.choose(rng).unwrap(), &c);
                b.part_edge(PartNodeRef::object(&id), PartNodeRef::object(&c), PartRelation::In, true);
            }
            // Floor furniture related to an earlier floor object.
            5..=7 => {
                let pick = rng.gen_range(0..10);
                let cat = if pick < 2 {
                    *SURFACES.choose(rng).unwrap()
                } else if pick < 3 {
                    *CONTAINERS.choose(rng).unwrap()
                } else {
                    *FLOOR_ITEMS.choose(rng).unwrap()
                };
                let anchor = floor_objects.choose(rng).unwrap().clone();
                let id = b.add(cat, root);
                if rng.gen_bool(0.5) {
                    b.rel(&id, &anchor, *LATERAL.choose(rng).unwrap());
                } else {
                    b.rel(&id, &anchor, *DEPTH.choose(rng).unwrap());
                }
                if rng.gen_bool(0.4) {
                    b.rel(&id, &anchor, ObjectRelation::Near);
                }
                floor_objects.push(id.clone());
                if SURFACES.contains(&cat) {
                    surfaces.push(id);
                } else if CONTAINERS.contains(&cat) {
                    containers.push(id);
                }
            }
            // Another leaning item on a wall not used yet.
            _ if walls_used < WALLS.len() => {
                let id = b.add(LEANING_ITEMS.choose(rng).unwrap(), root);
                b.wall_lean(&id, root, rng.gen_range(0..WALLS.len()));
                walls_used += 1;
            }
            _ => {}
        }
    }
    b.pag
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pag::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn catalog_has_forty_assets() {
        assert_eq!(catalog().len(), 40);
    }

    #[test]
    fn generated_graphs_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..100 {
            let n = rng.gen_range(5..=15);
            let pag = random_pag(&mut rng, &format!("g{k}"), n);
            assert_eq!(pag.objects.len(), n + 1);
            let report = validate(&pag);
            assert!(report.is_valid(), "{report}");
        }
    }
}
