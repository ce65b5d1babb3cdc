//! Dual-channel description of candidate waypoints: landmark objects
//! ("what") and room type ("where").

use serde::{Deserialize, Serialize};

use crate::geometry::Sector;
use crate::llm_backend::{Backend, ChatMessage, Params, PromptRole};
use crate::world::{Scene, Waypoint};

/// Objects farther than this from a waypoint are not reported.
pub const VISIBILITY_RADIUS: f64 = 2.0;
pub const MAX_LISTED_OBJECTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub waypoint_index: usize,
    pub sector_name: String,
    pub what: Vec<String>,
    #[serde(rename = "where")]
    pub where_: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriberMode {
    #[default]
    Oracle,
    Generative,
}

pub fn sector_of(rel_heading: f64) -> (u8, &'static str) {
    let s = Sector::of_heading(rel_heading);
    (s.index(), s.name())
}

/// Room type at the waypoint, plus the labels of that room's objects
/// within `radius`, nearest first.
pub fn describe_oracle(waypoint: &Waypoint, scene: &Scene, radius: f64) -> SceneDescription {
    let room = scene.nearest_room(&waypoint.position);
    let mut near: Vec<(f64, &str)> = room
        .objects
        .iter()
        .map(|o| (o.position.distance(&waypoint.position), o.label.as_str()))
        .filter(|(d, _)| *d <= radius)
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    SceneDescription {
        waypoint_index: waypoint.index,
        sector_name: waypoint.sector_name().to_string(),
        what: near
            .into_iter()
            .take(MAX_LISTED_OBJECTS)
            .map(|(_, l)| l.to_string())
            .collect(),
        where_: room.room_type.clone(),
    }
}

pub fn format_description(desc: &SceneDescription) -> String {
    format!(
        "In ({}), See ({}), Is ({})",
        desc.sector_name,
        desc.what.join(", "),
        desc.where_
    )
}

/// Inverse of [`format_description`]: `(sector_name, what, where)`.
pub fn parse_description(text: &str) -> Option<(String, Vec<String>, String)> {
    let rest = text.trim().strip_prefix("In (")?;
    let (sector, rest) = rest.split_once("), See (")?;
    let (what, rest) = rest.rsplit_once("), Is (")?;
    let room = rest.strip_suffix(')')?;
    let what = if what.is_empty() {
        Vec::new()
    } else {
        what.split(", ").map(str::to_string).collect()
    };
    Some((sector.to_string(), what, room.to_string()))
}

/// Describer request. The observation line stands in for the waypoint's
/// image crop.
pub fn describer_prompt(waypoint: &Waypoint, observation: &str) -> Vec<ChatMessage> {
    vec![
        ChatMessage::system(format!(
            "{}\nDescribe the view as: In (direction), See (objects), Is (room type).",
            PromptRole::Describer.tag()
        )),
        ChatMessage::user(format!(
            "Waypoint: {}\nDirection: {}\nObservation: {observation}",
            waypoint.index,
            waypoint.sector_name()
        )),
    ]
}

pub fn describe(
    waypoint: &Waypoint,
    scene: &Scene,
    mode: DescriberMode,
    backend: Option<&mut dyn Backend>,
) -> SceneDescription {
    let oracle = describe_oracle(waypoint, scene, VISIBILITY_RADIUS);
    let (DescriberMode::Generative, Some(backend)) = (mode, backend) else {
        return oracle;
    };
    let reply = backend.complete(
        &describer_prompt(waypoint, &format_description(&oracle)),
        &Params::default(),
    );
    match reply.as_deref().ok().and_then(parse_description) {
        Some((_, what, where_)) => SceneDescription { what, where_, ..oracle },
        None => {
            log::warn!(
                "describer reply for waypoint {} unusable; using the oracle description",
                waypoint.index
            );
            oracle
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Pose};
    use crate::llm_backend::{BackendError, ScriptedBackend};
    use crate::world::scene::{Room, SceneObject};
    use crate::world::test_support::open_room_scene;

    fn wp_at(x: f64, y: f64) -> Waypoint {
        Waypoint {
            index: 2,
            rel_heading: 45,
            sector: Sector::RightFront,
            distance: 1.0,
            position: Point::new(x, y),
        }
    }

    #[test]
    fn sector_mapping() {
        assert_eq!(sector_of(0.0), (1, "Front"));
        assert_eq!(sector_of(45.0), (2, "Right Front"));
        assert_eq!(sector_of(337.5), (1, "Front"));
        assert_eq!(sector_of(-22.5), (1, "Front"));
        assert_eq!(sector_of(22.5), (2, "Right Front"));
        for k in 0..8 {
            assert_eq!(sector_of(k as f64 * 45.0).0, k + 1);
        }
    }

    #[test]
    fn oracle_lists_nearby_objects_nearest_first() {
        let scene = open_room_scene();
        // sofa at (0.375, 0.375), lamp at (0.875, 0.375)
        let d = describe_oracle(&wp_at(0.5, 0.9), &scene, VISIBILITY_RADIUS);
        assert_eq!(d.where_, "living room");
        assert_eq!(d.what[..2], ["sofa".to_string(), "lamp".to_string()]);
        let empty = describe_oracle(&wp_at(5.0, 8.0), &scene, VISIBILITY_RADIUS);
        assert!(empty.what.is_empty());
        assert_eq!(empty.where_, "living room");
    }

    #[test]
    fn object_list_capped_at_ten() {
        let labels = [
            "sofa",
            "lamp",
            "coffee table",
            "bookshelf",
            "rug",
            "painting",
            "clock",
            "curtains",
            "plant",
            "armchair",
            "television",
            "fireplace",
        ];
        let objects: Vec<SceneObject> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| SceneObject {
                label: l.to_string(),
                position: Point::new(1.125 + 0.25 * i as f64, 1.125),
            })
            .collect();
        let mut rooms = open_room_scene().rooms;
        rooms[0].objects = objects;
        let scene = Scene::from_parts(0, 55, 42, rooms, open_room_scene().doors).unwrap();
        let d = describe_oracle(&wp_at(1.125, 1.25), &scene, 5.0);
        assert_eq!(d.what.len(), 10);
        assert_eq!(d.what[0], "sofa");
        assert_eq!(d.what[9], "armchair");
    }

    #[test]
    fn labels_belong_to_the_waypoint_room() {
        // a kitchen object 0.5 m away through the wall is not reported
        let scene = open_room_scene();
        let d = describe_oracle(&wp_at(10.0, 0.5), &scene, VISIBILITY_RADIUS);
        let room: &Room = scene.room_at(&Point::new(10.0, 0.5)).unwrap();
        assert!(d.what.iter().all(|l| room.objects.iter().any(|o| &o.label == l)));
    }

    #[test]
    fn format_and_parse() {
        let d = SceneDescription {
            waypoint_index: 1,
            sector_name: "Right Front".into(),
            what: vec!["counter".into(), "stove".into()],
            where_: "kitchen".into(),
        };
        let s = format_description(&d);
        assert_eq!(s, "In (Right Front), See (counter, stove), Is (kitchen)");
        assert_eq!(
            parse_description(&s),
            Some(("Right Front".into(), d.what.clone(), "kitchen".into()))
        );
        let e = SceneDescription {
            sector_name: "Front".into(),
            what: vec![],
            where_: "hallway".into(),
            ..d
        };
        assert_eq!(format_description(&e), "In (Front), See (), Is (hallway)");
        assert_eq!(
            parse_description("In (Front), See (), Is (hallway)").unwrap().1,
            Vec::<String>::new()
        );
        assert_eq!(parse_description("nonsense"), None);
    }

    struct Garbage;

    impl Backend for Garbage {
        fn complete(&mut self, _: &[ChatMessage], _: &Params) -> Result<String, BackendError> {
            Ok("I see a nice room".into())
        }
    }

    #[test]
    fn generative_mode_parses_or_falls_back() {
        let scene = open_room_scene();
        let wp = crate::world::predict_waypoints(&scene, &Pose::new(1.0, 1.0, 0.0), 3)
            .unwrap()
            .remove(0);
        let oracle = describe_oracle(&wp, &scene, VISIBILITY_RADIUS);
        let mut scripted = ScriptedBackend::new();
        assert_eq!(
            describe(&wp, &scene, DescriberMode::Generative, Some(&mut scripted)),
            oracle
        );
        assert_eq!(
            describe(&wp, &scene, DescriberMode::Generative, Some(&mut Garbage)),
            oracle
        );
        assert_eq!(describe(&wp, &scene, DescriberMode::Oracle, None), oracle);
    }
}
