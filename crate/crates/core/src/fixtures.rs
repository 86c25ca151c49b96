//! The video/teaser example schema, its `GetTeasers` query and a response,
//! used by tests, the mock server and the demo pipeline.

/// Video/teaser schema: 5 types, 13 schema tuples, entry points `video` and `teasers`.
pub const TEASER_SCHEMA_SDL: &str = r#"interface Node {
  id: ID!
}

type Video implements Node {
  id: ID!
  title: String!
  url: String!
  videoType: VideoTypeEnum
  teaser: Teaser
}

enum VideoTypeEnum {
  ANALYSIS
  INTERVIEW
  PRESENTATION
}

type Teaser {
  title: String!
  subTitle: String
  url: String!
  duration: Float
  publishedOnSite: Boolean
}

type Query {
  video(id: ID!): Video
  teasers(first: Int!): [Teaser]
}
"#;

pub const GET_TEASERS_QUERY: &str = r#"query GetTeasers {
  teasers(first: 2) {
    title
    subTitle
    url
    __typename
  }
}
"#;

/// Response to [`GET_TEASERS_QUERY`]: two teasers, the second without a subtitle.
pub const GET_TEASERS_RESPONSE: &str = r#"{
  "data": {
    "teasers": [
      {
        "title": "Finance 101",
        "subTitle": "The basics of finance",
        "url": "https://youtu.be/dQw4w9WgXcQ",
        "__typename": "Teaser"
      },
      {
        "title": "Development 101",
        "subTitle": null,
        "url": "https://youtu.be/jNQXAC9IVRw",
        "__typename": "Teaser"
      }
    ]
  }
}
"#;
