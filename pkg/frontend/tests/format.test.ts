import { describe, expect, it } from "vitest";

import { fixed, percent, seconds, skillStatusLabel } from "../src/format";

describe("percent", () => {
  it("renders a combined score of 0.746 as 74.6%", () => {
    expect(percent(0.746)).toBe("74.6%");
  });

  it("keeps one decimal place", () => {
    expect(percent(1.0)).toBe("100.0%");
    expect(percent(0)).toBe("0.0%");
    expect(percent(0.8)).toBe("80.0%");
    expect(percent(0.96325)).toBe("96.3%");
  });
});

describe("fixed and seconds", () => {
  it("formats losses and durations", () => {
    expect(fixed(0.123456, 4)).toBe("0.1235");
    expect(seconds(17.1)).toBe("17.1 s");
  });
});

describe("skillStatusLabel", () => {
  it("translates statuses for the operator", () => {
    expect(skillStatusLabel("trained")).toBe("trained");
    expect(skillStatusLabel("pending_demos")).toBe("needs demonstrations");
    expect(skillStatusLabel("training")).toBe("training");
    expect(skillStatusLabel("unheard_of")).toBe("unheard_of");
  });
});
