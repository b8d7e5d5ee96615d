// Shared fixtures for UI tests: the page skeleton the app binds to and
// a poll-until helper for asynchronous DOM updates.

export function pageSkeleton(): HTMLElement {
  const root = document.createElement("div");
  root.innerHTML = `
    <div id="banner" hidden></div>
    <div id="mode"></div>
    <div id="scene"></div>
    <form id="prompt-form">
      <input name="request" />
      <button type="submit">send</button>
    </form>
    <div id="conversation"></div>
    <form id="amend-form">
      <input name="sausages" type="number" value="" />
      <select name="rice"><option value=""></option>
        <option value="true">present</option><option value="false">absent</option>
      </select>
      <select name="capped"><option value=""></option>
        <option value="true">on</option><option value="false">off</option>
      </select>
      <select name="pan_cover"><option value=""></option>
        <option value="on_bowl">on bowl</option><option value="on_table">on table</option>
      </select>
      <button type="submit">apply</button>
    </form>
    <div id="teach"></div>
    <div id="skills"></div>
    <div id="training"></div>
    <div id="benchmarks"></div>
  `;
  document.body.replaceChildren(root);
  return root;
}

export async function until(
  cond: () => boolean | Promise<boolean>,
  timeoutMs = 15_000,
  stepMs = 50,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    if (await cond()) return;
    if (Date.now() > deadline) throw new Error("condition not met in time");
    await new Promise((r) => setTimeout(r, stepMs));
  }
}

export function submit(form: HTMLFormElement) {
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}
